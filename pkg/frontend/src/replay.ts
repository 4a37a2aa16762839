/**
 * Step-through viewer over a logged episode. Frames are reproduced via
 * GET /render at each turn's stored direction (rendering is deterministic,
 * so this is the image the agent saw); the verdict and distance readout
 * come straight off the persisted record.
 */

import type { ApiClient, EpisodeRecordDto, TaskRecord, ViewSpecDto } from "./api.js";

export interface ReplayFrame {
	index: number; // 0 = reset observation
	yawDeg: number;
	pitchDeg: number;
	feedback: string;
	actionParsed: string | null;
	actionRaw: string | null;
	imageUrl: string | null;
	imageMissing: boolean;
}

export interface Verdict {
	done: boolean;
	success: boolean | null;
	reason: string | null;
	/** Distance-to-goal component of the terminal reward, if recorded. */
	distanceReward: number | null;
	totalReward: number | null;
}

export class ReplaySession {
	readonly frames: ReplayFrame[];
	private cursor = 0;

	constructor(
		private readonly record: EpisodeRecordDto,
		private readonly task: TaskRecord | null,
		private readonly api: ApiClient,
		private readonly view: ViewSpecDto,
	) {
		const pano = task?.panorama_ref ?? record.task_id;
		const url = (yaw: number, pitch: number) =>
			api.renderUrl(pano, yaw, pitch, view.hfov_deg, view.width_px, view.height_px, true);
		this.frames = [
			{
				index: 0,
				yawDeg: record.start.yaw_deg,
				pitchDeg: record.start.pitch_deg,
				feedback: "",
				actionParsed: null,
				actionRaw: null,
				imageUrl: url(record.start.yaw_deg, record.start.pitch_deg),
				imageMissing: false,
			},
			...record.turns.map((turn) => ({
				index: turn.turn,
				yawDeg: turn.yaw_deg,
				pitchDeg: turn.pitch_deg,
				feedback: turn.feedback,
				actionParsed: turn.action_parsed,
				actionRaw: turn.action_raw,
				imageUrl: url(turn.yaw_deg, turn.pitch_deg),
				imageMissing: false,
			})),
		];
	}

	get index(): number {
		return this.cursor;
	}

	current(): ReplayFrame {
		const frame = this.frames[this.cursor];
		if (!frame) throw new Error("replay cursor out of range");
		return frame;
	}

	/** Clamped stepping: repeated next/prev at the ends is a no-op. */
	next(): ReplayFrame {
		this.cursor = Math.min(this.frames.length - 1, this.cursor + 1);
		return this.current();
	}

	prev(): ReplayFrame {
		this.cursor = Math.max(0, this.cursor - 1);
		return this.current();
	}

	seek(index: number): ReplayFrame {
		this.cursor = Math.min(this.frames.length - 1, Math.max(0, index));
		return this.current();
	}

	/** A frame whose image failed to load shows a placeholder with warning. */
	markImageMissing(index: number): void {
		const frame = this.frames[index];
		if (frame) {
			frame.imageMissing = true;
			frame.imageUrl = null;
		}
	}

	verdict(): Verdict {
		const terminal = this.record.terminal;
		if (!terminal) {
			return { done: false, success: null, reason: null, distanceReward: null, totalReward: null };
		}
		return {
			done: true,
			success: terminal.success,
			reason: terminal.reason,
			distanceReward: terminal.reward.r_dist,
			totalReward: terminal.reward.total,
		};
	}

	/** Target-box overlay for the final frame, projected by the service. */
	async finalOverlay(): Promise<([number, number] | null)[]> {
		if (!this.task) return [];
		const last = this.frames[this.frames.length - 1];
		if (!last) return [];
		const t = this.task.target;
		const halfW = t.width_deg / 2;
		const halfH = t.height_deg / 2;
		return this.api.project(
			{ yaw_deg: last.yawDeg, pitch_deg: last.pitchDeg },
			this.view,
			[
				{ yaw_deg: t.yaw_deg, pitch_deg: t.pitch_deg },
				{ yaw_deg: t.yaw_deg - halfW, pitch_deg: t.pitch_deg - halfH },
				{ yaw_deg: t.yaw_deg + halfW, pitch_deg: t.pitch_deg - halfH },
				{ yaw_deg: t.yaw_deg - halfW, pitch_deg: t.pitch_deg + halfH },
				{ yaw_deg: t.yaw_deg + halfW, pitch_deg: t.pitch_deg + halfH },
			],
		);
	}
}

export async function loadReplay(
	api: ApiClient,
	episodeId: string,
	view: ViewSpecDto,
): Promise<ReplaySession> {
	const record = await api.getEpisode(episodeId);
	let task: TaskRecord | null = null;
	try {
		const tasks = await api.listTasks();
		task = tasks.find((t) => t.id === record.task_id) ?? null;
	} catch {
		task = null; // replay still works without the task; no overlay
	}
	return new ReplaySession(record, task, api, view);
}
