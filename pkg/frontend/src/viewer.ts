/**
 * Canvas wiring: paints the current render, the drawn rectangle, and any
 * projected overlay markers; forwards drag/key/numeric input into the
 * view-state transitions. Pure DOM glue; all logic lives in the modules
 * it calls.
 */

import type { ApiClient } from "./api.js";
import type { RectPx } from "./annotate.js";
import {
	RenderThrottle,
	type ViewState,
	applyDrag,
	headingLabel,
} from "./view_state.js";

export interface ViewerCallbacks {
	onStateChange(state: ViewState): void;
	onRectDrawn(rect: RectPx): void;
	onRenderError(message: string): void;
}

export class PanoViewer {
	private state: ViewState;
	private throttle = new RenderThrottle();
	private trailing: number | null = null;
	private drawMode = false;
	private dragStart: [number, number] | null = null;
	private rect: RectPx | null = null;
	private overlay: ([number, number] | null)[] = [];
	private image = new Image();
	private retryBanner = false;

	constructor(
		private readonly canvas: HTMLCanvasElement,
		private readonly api: ApiClient,
		initial: ViewState,
		private readonly callbacks: ViewerCallbacks,
	) {
		this.state = initial;
		canvas.width = initial.widthPx;
		canvas.height = initial.heightPx;
		this.image.onload = () => {
			this.retryBanner = false;
			this.paint();
		};
		this.image.onerror = () => {
			this.retryBanner = true;
			this.callbacks.onRenderError("render failed; state preserved, retrying on next input");
			this.paint();
		};
		this.bindInput();
	}

	get viewState(): ViewState {
		return this.state;
	}

	setState(state: ViewState): void {
		this.state = state;
		this.callbacks.onStateChange(state);
		this.requestRender();
	}

	setDrawMode(on: boolean): void {
		this.drawMode = on;
	}

	setOverlay(pixels: ([number, number] | null)[]): void {
		this.overlay = pixels;
		this.paint();
	}

	clearRect(): void {
		this.rect = null;
		this.paint();
	}

	requestRender(): void {
		const now = performance.now();
		if (this.throttle.shouldRender(now)) {
			this.loadFrame();
		} else if (this.trailing === null) {
			this.trailing = window.setTimeout(() => {
				this.trailing = null;
				this.throttle.shouldRender(performance.now());
				this.loadFrame();
			}, this.throttle.msUntilNextSlot(now));
		}
	}

	private loadFrame(): void {
		if (!this.state.panoId) return;
		this.image.src = this.api.renderUrl(
			this.state.panoId,
			this.state.yawDeg,
			this.state.pitchDeg,
			this.state.hfovDeg,
			this.state.widthPx,
			this.state.heightPx,
			true,
		);
	}

	private bindInput(): void {
		this.canvas.addEventListener("mousedown", (ev) => {
			this.dragStart = [ev.offsetX, ev.offsetY];
		});
		this.canvas.addEventListener("mousemove", (ev) => {
			if (!this.dragStart) return;
			if (this.drawMode) {
				this.rect = {
					x0: Math.min(this.dragStart[0], ev.offsetX),
					y0: Math.min(this.dragStart[1], ev.offsetY),
					x1: Math.max(this.dragStart[0], ev.offsetX),
					y1: Math.max(this.dragStart[1], ev.offsetY),
				};
				this.paint();
			} else {
				const [sx, sy] = this.dragStart;
				this.dragStart = [ev.offsetX, ev.offsetY];
				this.setState(applyDrag(this.state, sx - ev.offsetX, ev.offsetY - sy));
			}
		});
		this.canvas.addEventListener("mouseup", () => {
			if (this.drawMode && this.rect) {
				this.callbacks.onRectDrawn(this.rect);
			}
			this.dragStart = null;
		});
	}

	private paint(): void {
		const ctx = this.canvas.getContext("2d");
		if (!ctx) return;
		ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
		if (this.image.complete && this.image.naturalWidth > 0) {
			ctx.drawImage(this.image, 0, 0, this.canvas.width, this.canvas.height);
		}
		if (this.rect) {
			ctx.strokeStyle = "#ff3355";
			ctx.lineWidth = 2;
			ctx.strokeRect(
				this.rect.x0,
				this.rect.y0,
				this.rect.x1 - this.rect.x0,
				this.rect.y1 - this.rect.y0,
			);
		}
		for (const px of this.overlay) {
			if (!px) continue;
			ctx.strokeStyle = "#ffd633";
			ctx.lineWidth = 2;
			ctx.beginPath();
			ctx.arc(px[0], px[1], 5, 0, 2 * Math.PI);
			ctx.stroke();
		}
		if (this.retryBanner) {
			ctx.fillStyle = "rgba(160, 30, 30, 0.85)";
			ctx.fillRect(0, 0, this.canvas.width, 28);
			ctx.fillStyle = "#fff";
			ctx.font = "14px sans-serif";
			ctx.fillText("render failed — input retries automatically", 10, 19);
		}
		ctx.fillStyle = "rgba(0, 0, 0, 0.6)";
		ctx.fillRect(0, this.canvas.height - 26, 180, 26);
		ctx.fillStyle = "#9f9";
		ctx.font = "13px monospace";
		ctx.fillText(`heading ${headingLabel(this.state)}`, 8, this.canvas.height - 8);
	}
}
