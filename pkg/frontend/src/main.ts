/** Bootstrap: wires the API client, viewer canvas, annotation form, and
 * replay panel to the static page in index.html. */

import { ApiClient } from "./api.js";
import {
	type DraftAnnotation,
	draftProblems,
	emptyDraft,
	overlayPixels,
	resolveTarget,
	saveDraft,
} from "./annotate.js";
import { loadReplay, type ReplaySession } from "./replay.js";
import { PanoViewer } from "./viewer.js";
import { DEFAULT_VIEW_STATE, applyArrowKey, applyNumericEntry } from "./view_state.js";

function el<T extends HTMLElement>(id: string): T {
	const node = document.getElementById(id);
	if (!node) throw new Error(`missing element #${id}`);
	return node as T;
}

function setText(id: string, text: string): void {
	el(id).textContent = text;
}

async function start(): Promise<void> {
	const api = new ApiClient(
		(window as unknown as { PANOSEARCH_URL?: string }).PANOSEARCH_URL ?? "http://127.0.0.1:8800",
	);
	const canvas = el<HTMLCanvasElement>("view-canvas");
	let draft: DraftAnnotation = emptyDraft();
	let replay: ReplaySession | null = null;

	const viewer = new PanoViewer(canvas, api, { ...DEFAULT_VIEW_STATE, widthPx: 960, heightPx: 540 }, {
		onStateChange(state) {
			setText("heading", `yaw ${state.yawDeg.toFixed(1)}  pitch ${state.pitchDeg.toFixed(1)}`);
		},
		async onRectDrawn(rect) {
			draft.rect = rect;
			const panoId = viewer.viewState.panoId;
			if (!panoId) return;
			try {
				draft.resolvedTarget = await resolveTarget(api, "draft", viewer.viewState, rect);
				setText(
					"target-readout",
					`target (${draft.resolvedTarget.yaw_deg.toFixed(2)}, ` +
						`${draft.resolvedTarget.pitch_deg.toFixed(2)}) ` +
						`${draft.resolvedTarget.width_deg.toFixed(2)}x` +
						`${draft.resolvedTarget.height_deg.toFixed(2)} deg`,
				);
				viewer.setOverlay(await overlayPixels(api, viewer.viewState, draft.resolvedTarget));
			} catch (err) {
				setText("target-readout", String(err));
			}
			refreshProblems();
		},
		onRenderError(message) {
			setText("status", message);
		},
	});

	function refreshProblems(): void {
		const problems = draftProblems(draft);
		setText("problems", problems.length ? problems.join("; ") : "ready to save");
		el<HTMLButtonElement>("save-btn").disabled = problems.length > 0;
	}

	const panos = await api.listPanoramas();
	const select = el<HTMLSelectElement>("pano-select");
	for (const ref of panos) {
		const opt = document.createElement("option");
		opt.value = ref;
		opt.textContent = ref;
		select.appendChild(opt);
	}
	select.addEventListener("change", () => {
		viewer.setState({ ...viewer.viewState, panoId: select.value });
	});
	if (panos.length > 0 && panos[0]) {
		select.value = panos[0];
		viewer.setState({ ...viewer.viewState, panoId: panos[0] });
	}

	window.addEventListener("keydown", (ev) => {
		if (ev.key === "ArrowLeft" || ev.key === "ArrowRight" || ev.key === "ArrowUp" || ev.key === "ArrowDown") {
			viewer.setState(applyArrowKey(viewer.viewState, ev.key));
			ev.preventDefault();
		}
	});
	for (const field of ["yaw", "pitch", "hfov"] as const) {
		el<HTMLInputElement>(`${field}-input`).addEventListener("change", (ev) => {
			const value = Number.parseFloat((ev.target as HTMLInputElement).value);
			viewer.setState(applyNumericEntry(viewer.viewState, field, value));
		});
	}

	el<HTMLInputElement>("draw-mode").addEventListener("change", (ev) => {
		viewer.setDrawMode((ev.target as HTMLInputElement).checked);
	});
	el<HTMLInputElement>("instruction").addEventListener("input", (ev) => {
		draft.instruction = (ev.target as HTMLInputElement).value;
		refreshProblems();
	});
	el<HTMLSelectElement>("task-type").addEventListener("change", (ev) => {
		const taskType = (ev.target as HTMLSelectElement).value as "HOS" | "HPS";
		draft = { ...emptyDraft(taskType), instruction: draft.instruction, rect: draft.rect };
		refreshProblems();
	});

	el<HTMLButtonElement>("save-btn").addEventListener("click", async () => {
		const panoId = viewer.viewState.panoId;
		if (!panoId) return;
		const id = `annotated-${Date.now()}`;
		try {
			const outcome = await saveDraft(api, draft, id, panoId);
			if (outcome.saved) {
				setText("status", `saved ${outcome.saved.id}${outcome.replaced ? " (replaced)" : ""}`);
				draft = emptyDraft(draft.taskType);
				viewer.clearRect();
				viewer.setOverlay([]);
				refreshProblems();
			} else {
				setText("status", `save blocked: ${outcome.problems.join("; ")}`);
			}
		} catch (err) {
			setText("status", `save rejected: ${String(err)}`);
		}
	});

	el<HTMLButtonElement>("replay-load").addEventListener("click", async () => {
		const episodeId = el<HTMLInputElement>("replay-id").value.trim();
		if (!episodeId) return;
		try {
			replay = await loadReplay(api, episodeId, {
				width_px: 480,
				height_px: 270,
				hfov_deg: viewer.viewState.hfovDeg,
			});
			showReplayFrame();
		} catch (err) {
			setText("replay-verdict", String(err));
		}
	});
	el<HTMLButtonElement>("replay-prev").addEventListener("click", () => {
		replay?.prev();
		showReplayFrame();
	});
	el<HTMLButtonElement>("replay-next").addEventListener("click", () => {
		replay?.next();
		showReplayFrame();
	});

	function showReplayFrame(): void {
		if (!replay) return;
		const frame = replay.current();
		const img = el<HTMLImageElement>("replay-frame");
		if (frame.imageUrl) {
			img.src = frame.imageUrl;
			img.alt = `turn ${frame.index}`;
		} else {
			img.removeAttribute("src");
			img.alt = "image missing";
		}
		img.onerror = () => {
			replay?.markImageMissing(frame.index);
			img.alt = "image missing (placeholder)";
		};
		setText(
			"replay-meta",
			`turn ${frame.index}/${replay.frames.length - 1}  ` +
				`dir (${frame.yawDeg.toFixed(1)}, ${frame.pitchDeg.toFixed(1)})  ` +
				`${frame.actionParsed ?? ""}  ${frame.feedback}`,
		);
		const verdict = replay.verdict();
		if (verdict.done) {
			const badge = verdict.success ? "SUCCESS" : "FAILURE";
			const dist =
				verdict.distanceReward === null ? "" : `  distance reward ${verdict.distanceReward.toFixed(3)}`;
			setText("replay-verdict", `${badge} (${verdict.reason})${dist}`);
		} else {
			setText("replay-verdict", "episode still running");
		}
		if (frame.index === replay.frames.length - 1) {
			void replay.finalOverlay().then((pixels) => {
				setText("replay-overlay", pixels.some((p) => p) ? "target box in view" : "target box out of view");
			});
		}
	}

	refreshProblems();
}

void start();
