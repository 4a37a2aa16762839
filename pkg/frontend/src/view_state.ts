/**
 * Virtual-camera interaction state: yaw wraps, pitch clamps, and every
 * input style (drag, arrow keys, numeric entry) funnels into the same
 * state transition. Render requests are throttled to at most 20/s.
 */

export interface ViewState {
	panoId: string | null;
	yawDeg: number;
	pitchDeg: number;
	hfovDeg: number;
	widthPx: number;
	heightPx: number;
}

export const DEFAULT_VIEW_STATE: ViewState = {
	panoId: null,
	yawDeg: 0,
	pitchDeg: 0,
	hfovDeg: 90,
	widthPx: 960,
	heightPx: 540,
};

export const ARROW_STEP_DEG = 10;
export const MIN_RENDER_INTERVAL_MS = 50; // <= 20 renders per second

export function wrapYaw(deg: number): number {
	let w = deg % 360;
	if (w < 0) w += 360;
	return w >= 360 ? 0 : w;
}

export function clampPitch(deg: number): number {
	return Math.min(90, Math.max(-90, deg));
}

export function rotateBy(state: ViewState, dyawDeg: number, dpitchDeg: number): ViewState {
	return {
		...state,
		yawDeg: wrapYaw(state.yawDeg + dyawDeg),
		pitchDeg: clampPitch(state.pitchDeg + dpitchDeg),
	};
}

/** Linear drag mapping: a full view-width drag pans exactly hfov degrees. */
export function applyDrag(state: ViewState, dxPx: number, dyPx: number): ViewState {
	const degPerPx = state.hfovDeg / state.widthPx;
	return rotateBy(state, dxPx * degPerPx, dyPx * degPerPx);
}

export function applyArrowKey(
	state: ViewState,
	key: "ArrowLeft" | "ArrowRight" | "ArrowUp" | "ArrowDown",
	stepDeg: number = ARROW_STEP_DEG,
): ViewState {
	switch (key) {
		case "ArrowLeft":
			return rotateBy(state, -stepDeg, 0);
		case "ArrowRight":
			return rotateBy(state, stepDeg, 0);
		case "ArrowUp":
			return rotateBy(state, 0, stepDeg);
		case "ArrowDown":
			return rotateBy(state, 0, -stepDeg);
	}
}

export function applyNumericEntry(
	state: ViewState,
	field: "yaw" | "pitch" | "hfov",
	value: number,
): ViewState {
	if (!Number.isFinite(value)) return state;
	switch (field) {
		case "yaw":
			return { ...state, yawDeg: wrapYaw(value) };
		case "pitch":
			return { ...state, pitchDeg: clampPitch(value) };
		case "hfov":
			return { ...state, hfovDeg: Math.min(179, Math.max(1, value)) };
	}
}

export function headingLabel(state: ViewState): string {
	return `(${state.yawDeg.toFixed(1)}, ${state.pitchDeg.toFixed(1)})`;
}

/**
 * Debounce gate for render requests. `shouldRender(now)` consumes a slot
 * when allowed; `pending` lets the caller schedule one trailing render so
 * the final drag position is never dropped.
 */
export class RenderThrottle {
	private lastMs = -Infinity;

	constructor(private readonly minIntervalMs: number = MIN_RENDER_INTERVAL_MS) {}

	shouldRender(nowMs: number): boolean {
		if (nowMs - this.lastMs >= this.minIntervalMs) {
			this.lastMs = nowMs;
			return true;
		}
		return false;
	}

	msUntilNextSlot(nowMs: number): number {
		return Math.max(0, this.minIntervalMs - (nowMs - this.lastMs));
	}
}
