// Immediate-mode canvas rendering. Everything here is a pure function of
// (state, context): no timers, no network, no mutation of the inputs.

import type { SocialAreaParams } from "./protocol.js";
import type { ViewState } from "./state.js";
import { worldToPixel, type Camera, type Vec2 } from "./viewport.js";

// The subset of CanvasRenderingContext2D the renderer touches; tests drive
// it with a recording stub.
export interface Draw {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export const H_MIN_ALERT = 0.2;

/** Radius of the egg-shaped social area at bearing delta from its heading
 * (server-provided parameters; drawn, not recomputed from tracks). */
export function areaRadius(area: SocialAreaParams, delta: number): number {
  const sigma = Math.abs(delta) <= Math.PI / 2 ? area.sigma_h : area.sigma_r;
  const c = Math.cos(delta);
  const s = Math.sin(delta);
  const denom =
    (c * c) / (2 * sigma * sigma) + (s * s) / (2 * area.sigma_s * area.sigma_s);
  return area.c_scale / denom;
}

/** World-space polyline of the social-area contour. */
export function socialContour(
  center: [number, number],
  area: SocialAreaParams,
  segments = 48,
): Vec2[] {
  const pts: Vec2[] = [];
  for (let i = 0; i < segments; i++) {
    const delta = -Math.PI + (2 * Math.PI * i) / segments;
    const r = areaRadius(area, delta);
    const ang = area.heading + delta;
    pts.push({
      x: center[0] + r * Math.cos(ang),
      y: center[1] + r * Math.sin(ang),
    });
  }
  return pts;
}

function polyline(ctx: Draw, cam: Camera, pts: Vec2[], close: boolean): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const px = worldToPixel(p, cam);
    if (i === 0) ctx.moveTo(px.x, px.y);
    else ctx.lineTo(px.x, px.y);
  });
  if (close) ctx.closePath();
  ctx.stroke();
}

function circle(ctx: Draw, cam: Camera, center: Vec2, radiusM: number,
                fill: string | null, stroke: string | null): void {
  const px = worldToPixel(center, cam);
  ctx.beginPath();
  ctx.arc(px.x, px.y, radiusM * cam.scale, 0, 2 * Math.PI);
  if (fill) {
    ctx.fillStyle = fill;
    ctx.fill();
  }
  if (stroke) {
    ctx.strokeStyle = stroke;
    ctx.stroke();
  }
}

export function render(state: ViewState, ctx: Draw): void {
  const cam = state.camera;
  ctx.clearRect(0, 0, cam.canvasW, cam.canvasH);
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, cam.canvasW, cam.canvasH);

  const hello = state.hello;
  if (hello) {
    // costmap shading: transparent when free, brighter as cost rises,
    // solid for lethal cells
    const m = hello.map;
    const cell = m.resolution * cam.scale;
    for (let iy = 0; iy < m.height; iy++) {
      for (let ix = 0; ix < m.width; ix++) {
        const cost = m.cost[iy][ix];
        if (cost <= 0) continue;
        ctx.fillStyle = cost >= 254
          ? "#4c566a"
          : `rgba(94,129,172,${(0.08 + 0.45 * cost / 254).toFixed(3)})`;
        const p = worldToPixel(
          { x: m.origin[0] + ix * m.resolution,
            y: m.origin[1] + (iy + 1) * m.resolution },
          cam,
        );
        ctx.fillRect(p.x, p.y, cell + 0.5, cell + 0.5);
      }
    }
  }

  const snap = state.snapshot;
  if (!snap) {
    ctx.fillStyle = "#d8dee9";
    ctx.font = "14px sans-serif";
    ctx.fillText(state.connected ? "waiting for snapshots..." : "connecting...", 16, 24);
    return;
  }

  // global path
  if (snap.global_path.length > 1) {
    ctx.strokeStyle = "#5e81ac";
    ctx.lineWidth = 2;
    polyline(ctx, cam, snap.global_path.map(([x, y]) => ({ x, y })), false);
  }

  // goal and preference point
  circle(ctx, cam, { x: snap.goal[0], y: snap.goal[1] }, 0.12, "#a3be8c", null);
  if (snap.preference_point) {
    circle(ctx, cam,
      { x: snap.preference_point[0], y: snap.preference_point[1] },
      0.1, "#b48ead", null);
  }

  // pending click marker until the next snapshot confirms
  if (state.pendingClick) {
    ctx.strokeStyle = state.pendingClick.tool === "goal" ? "#a3be8c" : "#b48ead";
    ctx.lineWidth = 1;
    const px = worldToPixel({ x: state.pendingClick.x, y: state.pendingClick.y }, cam);
    ctx.strokeRect(px.x - 6, px.y - 6, 12, 12);
  }

  // tracked social areas (egg contours grow as the server reports motion)
  ctx.lineWidth = 1.5;
  for (const track of snap.tracks) {
    ctx.strokeStyle = "#ebcb8b";
    polyline(ctx, cam, socialContour(track.pos, track.area), true);
  }

  // ground-truth pedestrians
  for (const ped of snap.pedestrians) {
    circle(ctx, cam, { x: ped.pos[0], y: ped.pos[1] }, ped.radius,
      "#bf616a", null);
  }

  // robot footprint and heading tick
  const [rx, ry, rtheta] = snap.robot.pose;
  circle(ctx, cam, { x: rx, y: ry }, snap.robot.radius, "#88c0d0", "#d8dee9");
  ctx.strokeStyle = "#2e3440";
  ctx.lineWidth = 2;
  polyline(ctx, cam, [
    { x: rx, y: ry },
    { x: rx + snap.robot.radius * Math.cos(rtheta),
      y: ry + snap.robot.radius * Math.sin(rtheta) },
  ], false);

  renderHud(state, ctx);
}

export function renderHud(state: ViewState, ctx: Draw): void {
  const snap = state.snapshot;
  if (!snap) return;
  const cam = state.camera;
  const x0 = 16;
  let y = 24;
  ctx.font = "13px monospace";
  ctx.fillStyle = "#d8dee9";
  ctx.fillText(
    `t=${snap.t.toFixed(1)}s  ${snap.variant}  ${snap.solver_status ?? "-"}` +
    `${snap.paused ? "  [paused]" : ""}${snap.collision ? "  COLLISION" : ""}` +
    `${snap.done ? (snap.success ? "  goal reached" : "  ended") : ""}`,
    x0, y);
  y += 20;

  // authority gauge: empty at eta = 0, full when the user holds control
  ctx.strokeStyle = "#d8dee9";
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, y, 120, 10);
  ctx.fillStyle = "#ebcb8b";
  ctx.fillRect(x0, y, 120 * snap.eta, 10);
  ctx.fillStyle = "#d8dee9";
  ctx.fillText(`eta ${snap.eta.toFixed(2)}`, x0 + 128, y + 9);
  y += 24;

  // barrier readout turns red when the margin is thin
  const h = snap.h_min;
  ctx.fillStyle = h !== null && h < H_MIN_ALERT ? "#bf616a" : "#a3be8c";
  ctx.fillText(`h_min ${h === null ? "n/a" : h.toFixed(2)}`, x0, y);
  y += 20;

  if (state.lastError) {
    ctx.fillStyle = "#bf616a";
    ctx.fillText(`server: ${state.lastError}`, x0, y);
  }
  if (state.tool !== "none") {
    ctx.fillStyle = "#b48ead";
    ctx.fillText(`click tool: ${state.tool}`, x0, cam.canvasH - 12);
  }
}
