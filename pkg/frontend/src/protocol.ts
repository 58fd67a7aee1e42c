// Wire protocol v1 of the bridge: one JSON object per frame.
// The cockpit only displays server values; it never recomputes paths,
// authority weights, or barrier values.

export const PROTOCOL_VERSION = 1;

export type SocialAreaParams = {
  heading: number;
  sigma_h: number;
  sigma_s: number;
  sigma_r: number;
  c_scale: number;
};

export type TrackView = {
  id: number;
  pos: [number, number];
  vel: [number, number];
  area: SocialAreaParams;
};

export type PedestrianView = {
  id: number;
  pos: [number, number];
  vel: [number, number];
  radius: number;
};

export type SnapshotPayload = {
  t: number;
  paused: boolean;
  done: boolean;
  success: boolean;
  variant: string;
  robot: { pose: [number, number, number]; cmd: [number, number]; radius: number };
  pedestrians: PedestrianView[];
  tracks: TrackView[];
  global_path: [number, number][];
  goal: [number, number];
  preference_point: [number, number] | null;
  eta: number;
  h_min: number | null;
  collision: boolean;
  solver_status: string | null;
};

export type MapPatch = {
  width: number;
  height: number;
  resolution: number;
  origin: [number, number];
  cost: number[][]; // row-major, 0..254 (254 = lethal), max-pooled
};

export type HelloPayload = {
  scenario: string;
  variant: string;
  tick_s: number;
  map: MapPatch;
  bounds: { v: [number, number]; omega: [number, number] };
  goal: [number, number];
  robot_radius: number;
};

export type ServerFrame =
  | { v: number; type: "hello"; seq: number; payload: HelloPayload }
  | { v: number; type: "snapshot"; seq: number; payload: SnapshotPayload }
  | { v: number; type: "map"; seq: number; payload: MapPatch }
  | { v: number; type: "error"; seq: number; payload: { message: string } };

export type ClientMessage =
  | { v: number; type: "user_cmd"; payload: { v: number; omega: number } }
  | { v: number; type: "set_preference"; payload: { x: number; y: number } }
  | { v: number; type: "set_goal"; payload: { x: number; y: number } }
  | { v: number; type: "set_mode"; payload: { variant: string } }
  | { v: number; type: "pause" }
  | { v: number; type: "resume" }
  | { v: number; type: "reset"; payload: { scenario?: string } };

export function decodeServerFrame(raw: string): ServerFrame | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  const frame = obj as ServerFrame;
  if (!frame || frame.v !== PROTOCOL_VERSION || typeof frame.seq !== "number") {
    return null;
  }
  if (frame.type !== "hello" && frame.type !== "snapshot"
      && frame.type !== "map" && frame.type !== "error") {
    return null;
  }
  return frame;
}

export function userCmd(v: number, omega: number): ClientMessage {
  return { v: PROTOCOL_VERSION, type: "user_cmd", payload: { v, omega } };
}

export function setPreference(x: number, y: number): ClientMessage {
  return { v: PROTOCOL_VERSION, type: "set_preference", payload: { x, y } };
}

export function setGoal(x: number, y: number): ClientMessage {
  return { v: PROTOCOL_VERSION, type: "set_goal", payload: { x, y } };
}

export function setMode(variant: string): ClientMessage {
  return { v: PROTOCOL_VERSION, type: "set_mode", payload: { variant } };
}
