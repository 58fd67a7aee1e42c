// View-side state: the latest snapshot by sequence number (stale frames
// dropped), the camera, the selected click tool, and connection status.

import type { HelloPayload, ServerFrame, SnapshotPayload } from "./protocol.js";
import type { Camera } from "./viewport.js";

export type Tool = "preference" | "goal" | "none";

export type ViewState = {
  hello: HelloPayload | null;
  snapshot: SnapshotPayload | null;
  snapshotSeq: number;
  camera: Camera;
  tool: Tool;
  connected: boolean;
  lastError: string | null;
  // marker drawn until the next snapshot confirms the re-plan
  pendingClick: { x: number; y: number; tool: Tool } | null;
};

export function initialState(canvasW: number, canvasH: number): ViewState {
  return {
    hello: null,
    snapshot: null,
    snapshotSeq: -1,
    camera: { centerX: 5, centerY: 5, scale: 60, canvasW, canvasH },
    tool: "none",
    connected: false,
    lastError: null,
    pendingClick: null,
  };
}

/** Fold one server frame into the state; stale snapshots are dropped. */
export function applyFrame(state: ViewState, frame: ServerFrame): ViewState {
  if (frame.type === "hello") {
    const map = frame.payload.map;
    const w = map.width * map.resolution;
    const h = map.height * map.resolution;
    const scale = Math.min(
      (state.camera.canvasW - 40) / w,
      (state.camera.canvasH - 40) / h,
    );
    return {
      ...state,
      hello: frame.payload,
      camera: {
        ...state.camera,
        centerX: map.origin[0] + w / 2,
        centerY: map.origin[1] + h / 2,
        scale,
      },
    };
  }
  if (frame.type === "map") {
    if (!state.hello) return state;
    return { ...state, hello: { ...state.hello, map: frame.payload } };
  }
  if (frame.type === "error") {
    return { ...state, lastError: frame.payload.message };
  }
  if (frame.seq <= state.snapshotSeq) {
    return state; // stale frame
  }
  return {
    ...state,
    snapshot: frame.payload,
    snapshotSeq: frame.seq,
    pendingClick: null, // the next authoritative frame clears the marker
  };
}
