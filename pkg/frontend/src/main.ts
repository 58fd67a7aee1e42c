// Cockpit bootstrap: canvas, toolbar, joystick pad, and the bridge socket.

import { connect } from "./client.js";
import { JoystickEmitter } from "./joystick.js";
import { setGoal, setMode, setPreference, userCmd, PROTOCOL_VERSION } from "./protocol.js";
import { render } from "./render.js";
import { applyFrame, initialState, type Tool, type ViewState } from "./state.js";
import { pan, pixelToWorld, zoomAt } from "./viewport.js";

const canvas = document.getElementById("world") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
let state: ViewState = initialState(canvas.width, canvas.height);

const params = new URLSearchParams(window.location.search);
const url = params.get("bridge") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;

const client = connect(
  url,
  (frame) => {
    state = applyFrame(state, frame);
    if (frame.type === "hello") {
      joystick.setBounds(frame.payload.bounds);
      (document.getElementById("variant") as HTMLSelectElement).value =
        frame.payload.variant;
    }
  },
  (connected) => {
    state = { ...state, connected };
  },
);

const joystick = new JoystickEmitter(
  { v: [-0.3, 1.2], omega: [-1.2, 1.2] },
  (v, omega) => client.send(userCmd(v, omega)),
);

// --- toolbar -------------------------------------------------------------

function toolButton(id: string, tool: Tool): void {
  document.getElementById(id)!.addEventListener("click", () => {
    state = { ...state, tool: state.tool === tool ? "none" : tool };
  });
}
toolButton("tool-pref", "preference");
toolButton("tool-goal", "goal");

document.getElementById("variant")!.addEventListener("change", (ev) => {
  client.send(setMode((ev.target as HTMLSelectElement).value));
});
document.getElementById("pause")!.addEventListener("click", () =>
  client.send({ v: PROTOCOL_VERSION, type: "pause" }));
document.getElementById("resume")!.addEventListener("click", () =>
  client.send({ v: PROTOCOL_VERSION, type: "resume" }));
document.getElementById("reset")!.addEventListener("click", () =>
  client.send({ v: PROTOCOL_VERSION, type: "reset", payload: {} }));

// --- canvas interactions --------------------------------------------------

function mapBounds(): { x0: number; y0: number; x1: number; y1: number } | null {
  if (!state.hello) return null;
  const m = state.hello.map;
  return {
    x0: m.origin[0],
    y0: m.origin[1],
    x1: m.origin[0] + m.width * m.resolution,
    y1: m.origin[1] + m.height * m.resolution,
  };
}

canvas.addEventListener("click", (ev) => {
  if (state.tool === "none") return;
  const rect = canvas.getBoundingClientRect();
  const p = pixelToWorld(
    { x: ev.clientX - rect.left, y: ev.clientY - rect.top },
    state.camera,
  );
  const b = mapBounds();
  if (b && (p.x < b.x0 || p.x > b.x1 || p.y < b.y0 || p.y > b.y1)) {
    state = { ...state, lastError: "click outside the map" };
    return;
  }
  client.send(state.tool === "goal" ? setGoal(p.x, p.y) : setPreference(p.x, p.y));
  state = { ...state, pendingClick: { x: p.x, y: p.y, tool: state.tool } };
});

let dragging = false;
let last = { x: 0, y: 0 };
canvas.addEventListener("mousedown", (ev) => {
  if (ev.button === 1 || ev.button === 2 || state.tool === "none") {
    dragging = true;
    last = { x: ev.clientX, y: ev.clientY };
  }
});
window.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  state = { ...state, camera: pan(state.camera, ev.clientX - last.x, ev.clientY - last.y) };
  last = { x: ev.clientX, y: ev.clientY };
});
window.addEventListener("mouseup", () => { dragging = false; });
canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
  state = {
    ...state,
    camera: zoomAt(state.camera,
      { x: ev.clientX - rect.left, y: ev.clientY - rect.top }, factor),
  };
});

// --- joystick pad ----------------------------------------------------------

const pad = document.getElementById("pad") as HTMLDivElement;
const knob = document.getElementById("knob") as HTMLDivElement;
let padActive = false;

function padVector(ev: PointerEvent): { x: number; y: number } {
  const rect = pad.getBoundingClientRect();
  const cx = rect.left + rect.width / 2;
  const cy = rect.top + rect.height / 2;
  const x = Math.max(-1, Math.min(1, (ev.clientX - cx) / (rect.width / 2)));
  const y = Math.max(-1, Math.min(1, (cy - ev.clientY) / (rect.height / 2)));
  return { x, y };
}

function moveKnob(x: number, y: number): void {
  knob.style.left = `${50 + x * 40}%`;
  knob.style.top = `${50 - y * 40}%`;
}

pad.addEventListener("pointerdown", (ev) => {
  padActive = true;
  pad.setPointerCapture(ev.pointerId);
  const v = padVector(ev);
  moveKnob(v.x, v.y);
  joystick.update(v.x, v.y);
});
pad.addEventListener("pointermove", (ev) => {
  if (!padActive) return;
  const v = padVector(ev);
  moveKnob(v.x, v.y);
  joystick.update(v.x, v.y);
});
function releasePad(): void {
  padActive = false;
  moveKnob(0, 0);
  joystick.release();
}
pad.addEventListener("pointerup", releasePad);
pad.addEventListener("pointercancel", releasePad);

// --- render loop ------------------------------------------------------------

function frame(): void {
  render(state, ctx);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
