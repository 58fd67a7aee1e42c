// Pan/zoom camera between world meters (y up) and canvas pixels (y down).

export type Camera = {
  centerX: number; // world point at the canvas center, meters
  centerY: number;
  scale: number; // pixels per meter
  canvasW: number;
  canvasH: number;
};

export type Vec2 = { x: number; y: number };

export function worldToPixel(p: Vec2, cam: Camera): Vec2 {
  return {
    x: cam.canvasW / 2 + (p.x - cam.centerX) * cam.scale,
    y: cam.canvasH / 2 - (p.y - cam.centerY) * cam.scale,
  };
}

export function pixelToWorld(px: Vec2, cam: Camera): Vec2 {
  return {
    x: cam.centerX + (px.x - cam.canvasW / 2) / cam.scale,
    y: cam.centerY - (px.y - cam.canvasH / 2) / cam.scale,
  };
}

export function zoomAt(cam: Camera, pixel: Vec2, factor: number): Camera {
  // keep the world point under the cursor fixed while scaling
  const anchor = pixelToWorld(pixel, cam);
  const scale = Math.min(2000, Math.max(5, cam.scale * factor));
  const ratio = cam.scale / scale;
  return {
    ...cam,
    scale,
    centerX: anchor.x - (anchor.x - cam.centerX) * ratio,
    centerY: anchor.y - (anchor.y - cam.centerY) * ratio,
  };
}

export function pan(cam: Camera, dxPixels: number, dyPixels: number): Camera {
  return {
    ...cam,
    centerX: cam.centerX - dxPixels / cam.scale,
    centerY: cam.centerY + dyPixels / cam.scale,
  };
}
