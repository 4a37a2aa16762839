/**
 * Typed client for the panosearch service wire protocol.
 *
 * The console never does angular math itself: every angle it shows comes
 * out of one of these calls, which is why even the pixel placement of
 * overlays goes through POST /project.
 */

export interface DirectionDto {
	yaw_deg: number;
	pitch_deg: number;
}

export interface ViewSpecDto {
	width_px: number;
	height_px: number;
	hfov_deg: number;
}

export interface BoxDto {
	yaw_deg: number;
	pitch_deg: number;
	width_deg: number;
	height_deg: number;
}

export interface DifficultyDto {
	level: "Easy" | "Medium" | "Hard" | "Extreme";
	basis: "annotated" | "computed";
}

export interface HpsCuesDto {
	has_text_cue: boolean;
	cue_aligned: boolean;
}

export interface TaskRecord {
	id: string;
	task_type: "HOS" | "HPS";
	panorama_ref: string;
	instruction: string;
	target: BoxDto;
	start_orientations: DirectionDto[];
	difficulty: DifficultyDto;
	scene_category?: string;
	hps_cues?: HpsCuesDto;
	[extra: string]: unknown;
}

export interface ObservationDto {
	image_png_b64: string;
	feedback: string;
	valid_action: string;
	direction: DirectionDto;
	turn: number;
	done: boolean;
}

export interface RewardDto {
	r_corr: number;
	r_form: number;
	r_dist: number;
	total: number;
	variant: string;
}

export interface TurnDto {
	turn: number;
	yaw_deg: number;
	pitch_deg: number;
	action_raw: string | null;
	action_parsed: string | null;
	feedback: string;
	image_path: string | null;
	timestamp: number;
}

export interface TerminalDto {
	success: boolean;
	reason: string;
	errored: boolean;
	reward: RewardDto;
}

export interface EpisodeRecordDto {
	episode_id: string;
	task_id: string;
	task_type: string;
	difficulty: string;
	start_index: number;
	start: DirectionDto;
	reset_image_path: string | null;
	turns: TurnDto[];
	terminal: TerminalDto | null;
}

export class ApiError extends Error {
	constructor(
		public readonly status: number,
		message: string,
	) {
		super(`service error ${status}: ${message}`);
	}
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
	constructor(
		private readonly baseUrl: string,
		private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
	) {}

	renderUrl(
		pano: string,
		yawDeg: number,
		pitchDeg: number,
		hfovDeg: number,
		widthPx: number,
		heightPx: number,
		cross: boolean,
	): string {
		const params = new URLSearchParams({
			pano,
			yaw: String(yawDeg),
			pitch: String(pitchDeg),
			hfov: String(hfovDeg),
			w: String(widthPx),
			h: String(heightPx),
			cross: cross ? "1" : "0",
		});
		return `${this.baseUrl}/render?${params.toString()}`;
	}

	private async request<T>(path: string, init?: RequestInit): Promise<T> {
		const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
		if (!resp.ok) {
			let detail = resp.statusText;
			try {
				const body = (await resp.json()) as { detail?: string };
				if (body.detail) detail = body.detail;
			} catch {
				/* non-JSON error body */
			}
			throw new ApiError(resp.status, detail);
		}
		return (await resp.json()) as T;
	}

	private post<T>(path: string, body: unknown): Promise<T> {
		return this.request<T>(path, {
			method: "POST",
			headers: { "Content-Type": "application/json" },
			body: JSON.stringify(body),
		});
	}

	async fetchRenderBlob(
		pano: string,
		yawDeg: number,
		pitchDeg: number,
		hfovDeg: number,
		widthPx: number,
		heightPx: number,
		cross: boolean,
	): Promise<Blob> {
		const resp = await this.fetchFn(
			this.renderUrl(pano, yawDeg, pitchDeg, hfovDeg, widthPx, heightPx, cross),
		);
		if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
		return await resp.blob();
	}

	async listTasks(): Promise<TaskRecord[]> {
		const body = await this.request<{ tasks: TaskRecord[] }>("/tasks");
		return body.tasks;
	}

	async listPanoramas(): Promise<string[]> {
		const body = await this.request<{ panoramas: string[] }>("/panoramas");
		return body.panoramas;
	}

	async saveTask(record: TaskRecord): Promise<{ saved: TaskRecord; replaced: boolean }> {
		return this.post("/tasks", record);
	}

	async backproject(
		taskId: string,
		viewDir: DirectionDto,
		spec: ViewSpecDto,
		rectPx: [number, number, number, number],
	): Promise<BoxDto> {
		const body = await this.post<{ target: BoxDto }>(
			`/tasks/${encodeURIComponent(taskId)}/backproject`,
			{ view_dir: viewDir, spec, rect_px: rectPx },
		);
		return body.target;
	}

	async project(
		viewDir: DirectionDto,
		spec: ViewSpecDto,
		directions: DirectionDto[],
	): Promise<([number, number] | null)[]> {
		const body = await this.post<{ pixels: ([number, number] | null)[] }>("/project", {
			view_dir: viewDir,
			spec,
			directions,
		});
		return body.pixels;
	}

	async createEpisode(
		taskId: string,
		startIndex: number,
	): Promise<{ episode_id: string; observation: ObservationDto }> {
		return this.post("/episodes", { task_id: taskId, start_index: startIndex });
	}

	async stepEpisode(
		episodeId: string,
		body: { raw_response: string } | { action: { type: string; yaw: number; pitch: number } },
	): Promise<{ observation: ObservationDto; done: boolean; success?: boolean; reward?: RewardDto }> {
		return this.post(`/episodes/${encodeURIComponent(episodeId)}/step`, body);
	}

	async getEpisode(episodeId: string): Promise<EpisodeRecordDto> {
		return this.request(`/episodes/${encodeURIComponent(episodeId)}`);
	}
}
