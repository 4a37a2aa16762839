/**
 * Draft-annotation workflow: draw a rectangle on the current view, resolve
 * it to an angular target through the service, confirm the re-projected
 * overlay, and persist. All geometry lives on the service side; the draft
 * only carries what the service returned.
 */

import type { ApiClient, BoxDto, DirectionDto, TaskRecord, ViewSpecDto } from "./api.js";
import type { ViewState } from "./view_state.js";

export interface RectPx {
	x0: number;
	y0: number;
	x1: number;
	y1: number;
}

export interface DraftAnnotation {
	taskType: "HOS" | "HPS";
	instruction: string;
	rect: RectPx | null;
	hpsCues: { hasTextCue: boolean; cueAligned: boolean } | null;
	/** Verbatim /backproject response; never computed client-side. */
	resolvedTarget: BoxDto | null;
	startOverrides: DirectionDto[] | null;
}

export function emptyDraft(taskType: "HOS" | "HPS" = "HOS"): DraftAnnotation {
	return {
		taskType,
		instruction: "",
		rect: null,
		hpsCues: taskType === "HPS" ? { hasTextCue: false, cueAligned: false } : null,
		resolvedTarget: null,
		startOverrides: null,
	};
}

export function normalizeRect(ax: number, ay: number, bx: number, by: number): RectPx {
	return {
		x0: Math.min(ax, bx),
		y0: Math.min(ay, by),
		x1: Math.max(ax, bx),
		y1: Math.max(ay, by),
	};
}

export function rectArea(rect: RectPx): number {
	return Math.max(0, rect.x1 - rect.x0) * Math.max(0, rect.y1 - rect.y0);
}

/** Blockers that must clear before save; empty list means saveable. */
export function draftProblems(draft: DraftAnnotation): string[] {
	const problems: string[] = [];
	if (!draft.rect || rectArea(draft.rect) <= 0) {
		problems.push("target box must have positive area");
	}
	if (draft.instruction.trim().length === 0) {
		problems.push("instruction must be non-empty");
	}
	if (draft.taskType === "HPS" && draft.hpsCues === null) {
		problems.push("path-search tasks need both cue flags");
	}
	if (draft.resolvedTarget === null) {
		problems.push("target not yet resolved through the service");
	}
	return problems;
}

export function specOf(view: ViewState): ViewSpecDto {
	return { width_px: view.widthPx, height_px: view.heightPx, hfov_deg: view.hfovDeg };
}

/** Resolve the drawn rectangle to an angular box via POST /backproject. */
export async function resolveTarget(
	api: ApiClient,
	taskId: string,
	view: ViewState,
	rect: RectPx,
): Promise<BoxDto> {
	return api.backproject(
		taskId,
		{ yaw_deg: view.yawDeg, pitch_deg: view.pitchDeg },
		specOf(view),
		[rect.x0, rect.y0, rect.x1, rect.y1],
	);
}

/**
 * Overlay geometry for visual confirmation: target center plus the four
 * box corners, projected into the current view by the service.
 */
export async function overlayPixels(
	api: ApiClient,
	view: ViewState,
	target: BoxDto,
): Promise<([number, number] | null)[]> {
	const halfW = target.width_deg / 2;
	const halfH = target.height_deg / 2;
	const directions: DirectionDto[] = [
		{ yaw_deg: target.yaw_deg, pitch_deg: target.pitch_deg },
		{ yaw_deg: target.yaw_deg - halfW, pitch_deg: target.pitch_deg - halfH },
		{ yaw_deg: target.yaw_deg + halfW, pitch_deg: target.pitch_deg - halfH },
		{ yaw_deg: target.yaw_deg - halfW, pitch_deg: target.pitch_deg + halfH },
		{ yaw_deg: target.yaw_deg + halfW, pitch_deg: target.pitch_deg + halfH },
	];
	return api.project({ yaw_deg: view.yawDeg, pitch_deg: view.pitchDeg }, specOf(view), directions);
}

export function buildTaskRecord(
	draft: DraftAnnotation,
	id: string,
	panoramaRef: string,
	sceneCategory: string,
): TaskRecord {
	if (draft.resolvedTarget === null) {
		throw new Error("cannot build a task record before the target is resolved");
	}
	const record: TaskRecord = {
		id,
		task_type: draft.taskType,
		panorama_ref: panoramaRef,
		instruction: draft.instruction.trim(),
		target: draft.resolvedTarget,
		start_orientations:
			draft.startOverrides ??
			[0, 90, 180, 270].map((yaw) => ({ yaw_deg: yaw, pitch_deg: 0 })),
		difficulty: { level: "Medium", basis: "annotated" },
		scene_category: sceneCategory,
	};
	if (draft.taskType === "HPS") {
		record.hps_cues = {
			has_text_cue: draft.hpsCues?.hasTextCue ?? false,
			cue_aligned: draft.hpsCues?.cueAligned ?? false,
		};
	}
	return record;
}

export interface SaveOutcome {
	saved: TaskRecord | null;
	replaced: boolean;
	problems: string[];
}

/** Validate, then persist through POST /tasks; blockers short-circuit. */
export async function saveDraft(
	api: ApiClient,
	draft: DraftAnnotation,
	id: string,
	panoramaRef: string,
	sceneCategory = "uncategorized",
): Promise<SaveOutcome> {
	const problems = draftProblems(draft);
	if (problems.length > 0) {
		return { saved: null, replaced: false, problems };
	}
	const record = buildTaskRecord(draft, id, panoramaRef, sceneCategory);
	const result = await api.saveTask(record);
	return { saved: result.saved, replaced: result.replaced, problems: [] };
}
