import { describe, expect, it } from "vitest";
import { pan, pixelToWorld, worldToPixel, zoomAt, type Camera } from "../src/viewport.js";

function randomCamera(rand: () => number): Camera {
  return {
    centerX: rand() * 20 - 10,
    centerY: rand() * 20 - 10,
    scale: 10 + rand() * 300,
    canvasW: 400 + Math.floor(rand() * 600),
    canvasH: 300 + Math.floor(rand() * 500),
  };
}

// deterministic LCG so failures reproduce
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (1664525 * s + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

describe("viewport transforms", () => {
  it("round-trips world -> pixel -> world within one pixel", () => {
    const rand = lcg(7);
    for (let i = 0; i < 500; i++) {
      const cam = randomCamera(rand);
      const p = { x: rand() * 30 - 15, y: rand() * 30 - 15 };
      const px = worldToPixel(p, cam);
      const back = pixelToWorld(px, cam);
      const pixelError = Math.hypot(
        (back.x - p.x) * cam.scale,
        (back.y - p.y) * cam.scale,
      );
      expect(pixelError).toBeLessThanOrEqual(1.0);
    }
  });

  it("round-trips pixel -> world -> pixel within one pixel", () => {
    const rand = lcg(21);
    for (let i = 0; i < 500; i++) {
      const cam = randomCamera(rand);
      const px = { x: rand() * cam.canvasW, y: rand() * cam.canvasH };
      const world = pixelToWorld(px, cam);
      const back = worldToPixel(world, cam);
      expect(Math.hypot(back.x - px.x, back.y - px.y)).toBeLessThanOrEqual(1.0);
    }
  });

  it("doubling the zoom halves the world offset of the same pixel", () => {
    const cam: Camera = { centerX: 5, centerY: 5, scale: 50, canvasW: 800, canvasH: 600 };
    const px = { x: 600, y: 150 };
    const before = pixelToWorld(px, cam);
    const zoomed = { ...cam, scale: cam.scale * 2 };
    const after = pixelToWorld(px, zoomed);
    expect(after.x - cam.centerX).toBeCloseTo((before.x - cam.centerX) / 2, 12);
    expect(after.y - cam.centerY).toBeCloseTo((before.y - cam.centerY) / 2, 12);
  });

  it("zoomAt keeps the anchor point fixed", () => {
    const cam: Camera = { centerX: 2, centerY: 3, scale: 80, canvasW: 700, canvasH: 500 };
    const px = { x: 123, y: 456 };
    const anchor = pixelToWorld(px, cam);
    const zoomed = zoomAt(cam, px, 1.7);
    const after = pixelToWorld(px, zoomed);
    expect(after.x).toBeCloseTo(anchor.x, 9);
    expect(after.y).toBeCloseTo(anchor.y, 9);
  });

  it("pan shifts the view by the dragged pixels", () => {
    const cam: Camera = { centerX: 0, centerY: 0, scale: 100, canvasW: 400, canvasH: 400 };
    const moved = pan(cam, 50, -30);
    expect(moved.centerX).toBeCloseTo(-0.5);
    expect(moved.centerY).toBeCloseTo(-0.3);
  });
});
