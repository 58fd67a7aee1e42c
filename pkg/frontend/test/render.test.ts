import { describe, expect, it } from "vitest";
import { areaRadius, render, socialContour, H_MIN_ALERT, type Draw } from "../src/render.js";
import { applyFrame, initialState } from "../src/state.js";
import type { ServerFrame, SocialAreaParams } from "../src/protocol.js";

function area(speed: number, heading = 0, c = 1.0): SocialAreaParams {
  const sigmaH = Math.max(0.5, 2 * speed);
  return {
    heading,
    sigma_h: sigmaH,
    sigma_s: (2 / 3) * sigmaH,
    sigma_r: 0.5 * sigmaH,
    c_scale: c,
  };
}

class RecordingCtx implements Draw {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  font = "";
  calls: string[] = [];
  private log(name: string, args: unknown[]): void {
    this.calls.push(
      `${name}(${args.map((a) => String(a)).join(",")})` +
      `|${String(this.fillStyle)}|${String(this.strokeStyle)}`);
  }
  clearRect(...a: number[]) { this.log("clearRect", a); }
  fillRect(...a: number[]) { this.log("fillRect", a); }
  strokeRect(...a: number[]) { this.log("strokeRect", a); }
  beginPath() { this.log("beginPath", []); }
  moveTo(...a: number[]) { this.log("moveTo", a); }
  lineTo(...a: number[]) { this.log("lineTo", a); }
  arc(...a: number[]) { this.log("arc", a); }
  closePath() { this.log("closePath", []); }
  stroke() { this.log("stroke", []); }
  fill() { this.log("fill", []); }
  fillText(text: string, x: number, y: number) { this.log("fillText", [text, x, y]); }
}

function snapshotFrame(hMin: number | null): ServerFrame {
  return {
    v: 1, type: "snapshot", seq: 2,
    payload: {
      t: 1.5, paused: false, done: false, success: false, variant: "ss-mpc-dcbf",
      robot: { pose: [2, 2, 0.5], cmd: [0.8, 0.1], radius: 0.6 },
      pedestrians: [{ id: 1, pos: [4, 4], vel: [1.2, 0], radius: 0.3 }],
      tracks: [{ id: 0, pos: [4, 4], vel: [1.2, 0], area: area(1.2, 0, 0.12) }],
      global_path: [[2, 2], [3, 3], [4, 4.5]],
      goal: [8, 8], preference_point: [3, 6],
      eta: 0.42, h_min: hMin, collision: false, solver_status: "optimal",
    },
  };
}

describe("social-area contour geometry", () => {
  it("stationary pedestrian contour is nearly round", () => {
    const a = area(0);
    const radii = [0, Math.PI / 3, Math.PI / 2, Math.PI].map((d) => areaRadius(a, d));
    // sigma floor keeps the side lobe smaller but the same order as the front
    expect(Math.max(...radii) / Math.min(...radii)).toBeLessThanOrEqual(4.0);
    expect(areaRadius(a, 0)).toBeCloseTo(0.5, 12);
  });

  it("walker's frontal lobe is four times the rear extent", () => {
    const a = area(1.2);
    expect(areaRadius(a, 0) / areaRadius(a, Math.PI)).toBeCloseTo(4.0, 12);
  });

  it("contour points trace the heading-aligned egg", () => {
    const a = area(1.2, Math.PI / 2);
    const pts = socialContour([0, 0], a, 64);
    expect(pts.length).toBe(64);
    // the farthest contour point lies ahead of motion (+y here)
    let best = pts[0];
    for (const p of pts) if (Math.hypot(p.x, p.y) > Math.hypot(best.x, best.y)) best = p;
    expect(best.y).toBeGreaterThan(0);
    expect(Math.abs(best.x)).toBeLessThan(Math.abs(best.y) * 0.2);
  });
});

describe("render", () => {
  it("is a pure function of (state, ctx): identical inputs, identical calls", () => {
    let state = initialState(800, 600);
    state = applyFrame(state, snapshotFrame(0.5));
    const a = new RecordingCtx();
    const b = new RecordingCtx();
    render(state, a);
    render(state, b);
    expect(a.calls).toEqual(b.calls);
    expect(a.calls.length).toBeGreaterThan(10);
  });

  it("h_min readout turns red below the alert threshold", () => {
    let state = initialState(800, 600);
    state = applyFrame(state, snapshotFrame(H_MIN_ALERT - 0.01));
    const ctx = new RecordingCtx();
    render(state, ctx);
    const hLine = ctx.calls.find((c) => c.includes("h_min"));
    expect(hLine).toBeDefined();
    expect(hLine!).toContain("#bf616a"); // alert color
    state = applyFrame(state, { ...snapshotFrame(0.5), seq: 3 });
    const ctx2 = new RecordingCtx();
    render(state, ctx2);
    expect(ctx2.calls.find((c) => c.includes("h_min"))!).toContain("#a3be8c");
  });

  it("eta gauge width scales with the server value", () => {
    let state = initialState(800, 600);
    state = applyFrame(state, snapshotFrame(0.5));
    const ctx = new RecordingCtx();
    render(state, ctx);
    const gauge = ctx.calls.find((c) => c.startsWith("fillRect(16,") && c.includes("#ebcb8b"));
    expect(gauge).toBeDefined();
    expect(gauge!).toContain(String(120 * 0.42));
  });
});
