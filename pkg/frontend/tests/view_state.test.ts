import { describe, expect, it } from "vitest";

import {
	DEFAULT_VIEW_STATE,
	RenderThrottle,
	applyArrowKey,
	applyDrag,
	applyNumericEntry,
	clampPitch,
	headingLabel,
	rotateBy,
	wrapYaw,
} from "../src/view_state.js";

const state = { ...DEFAULT_VIEW_STATE, panoId: "p", widthPx: 960, heightPx: 540, hfovDeg: 90 };

describe("angle state invariants", () => {
	it("wraps yaw into [0, 360)", () => {
		expect(wrapYaw(450)).toBe(90);
		expect(wrapYaw(-45)).toBe(315);
		expect(wrapYaw(360)).toBe(0);
	});

	it("clamps pitch to [-90, 90]", () => {
		expect(clampPitch(95)).toBe(90);
		expect(clampPitch(-123)).toBe(-90);
		expect(clampPitch(12.5)).toBe(12.5);
	});

	it("rotateBy composes wrap and clamp", () => {
		const s = rotateBy({ ...state, yawDeg: 350, pitchDeg: 85 }, 20, 10);
		expect(s.yawDeg).toBe(10);
		expect(s.pitchDeg).toBe(90);
	});
});

describe("drag mapping", () => {
	it("full view-width drag pans exactly hfov degrees", () => {
		const dragged = applyDrag(state, state.widthPx, 0);
		expect(dragged.yawDeg).toBeCloseTo(90, 10);
	});

	it("vertical drag uses the same degrees-per-pixel scale", () => {
		const dragged = applyDrag(state, 0, 96); // 96 px * (90/960) = 9 deg
		expect(dragged.pitchDeg).toBeCloseTo(9, 10);
	});

	it("scales with hfov for fine control when zoomed", () => {
		const zoomed = { ...state, hfovDeg: 30 };
		expect(applyDrag(zoomed, state.widthPx, 0).yawDeg).toBeCloseTo(30, 10);
	});
});

describe("arrow keys and numeric entry", () => {
	it("arrow-up at pitch 85 clamps to 90", () => {
		const s = applyArrowKey({ ...state, pitchDeg: 85 }, "ArrowUp");
		expect(s.pitchDeg).toBe(90);
	});

	it("arrow-left wraps across the seam", () => {
		const s = applyArrowKey({ ...state, yawDeg: 5 }, "ArrowLeft");
		expect(s.yawDeg).toBe(355);
	});

	it("numeric yaw entry of 450 displays as 90", () => {
		expect(applyNumericEntry(state, "yaw", 450).yawDeg).toBe(90);
	});

	it("ignores non-finite numeric entry", () => {
		expect(applyNumericEntry(state, "pitch", Number.NaN)).toEqual(state);
	});

	it("hfov entry stays inside (0, 180)", () => {
		expect(applyNumericEntry(state, "hfov", 500).hfovDeg).toBe(179);
		expect(applyNumericEntry(state, "hfov", 0).hfovDeg).toBe(1);
	});

	it("heading indicator shows current direction", () => {
		expect(headingLabel({ ...state, yawDeg: 312.25, pitchDeg: -4 })).toBe("(312.3, -4.0)");
	});
});

describe("render throttle", () => {
	it("allows at most one render per 50ms window", () => {
		const throttle = new RenderThrottle(50);
		let granted = 0;
		for (let t = 0; t <= 1000; t += 5) {
			if (throttle.shouldRender(t)) granted += 1;
		}
		expect(granted).toBeLessThanOrEqual(21); // <= 20/s plus the initial slot
		expect(granted).toBeGreaterThan(15);
	});

	it("reports the wait until the next slot", () => {
		const throttle = new RenderThrottle(50);
		expect(throttle.shouldRender(1000)).toBe(true);
		expect(throttle.shouldRender(1010)).toBe(false);
		expect(throttle.msUntilNextSlot(1010)).toBe(40);
	});
});
