import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { JoystickEmitter, joystickToCmd, type Bounds } from "../src/joystick.js";

const BOUNDS: Bounds = { v: [-0.3, 1.2], omega: [-1.2, 1.2] };

describe("joystickToCmd", () => {
  it("full forward maps to (v_max, 0)", () => {
    expect(joystickToCmd({ x: 0, y: 1 }, BOUNDS)).toEqual({ v: 1.2, omega: -0 });
  });

  it("centered stick emits nothing", () => {
    expect(joystickToCmd({ x: 0, y: 0 }, BOUNDS)).toBeNull();
  });

  it("push right turns clockwise", () => {
    const cmd = joystickToCmd({ x: 1, y: 0 }, BOUNDS)!;
    expect(cmd.v).toBe(0);
    expect(cmd.omega).toBe(-1.2);
  });

  it("pulling back reverses within the bound", () => {
    const cmd = joystickToCmd({ x: 0, y: -1 }, BOUNDS)!;
    expect(cmd.v).toBeCloseTo(-0.3, 12);
    expect(cmd.omega).toBe(-0);
  });

  it("inputs are clamped to the unit square", () => {
    const cmd = joystickToCmd({ x: -3, y: 4 }, BOUNDS)!;
    expect(cmd.v).toBe(1.2);
    expect(cmd.omega).toBe(1.2);
  });
});

describe("JoystickEmitter cadence", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("emits at 10 Hz while engaged and stops on release", () => {
    const sent: Array<[number, number]> = [];
    const stick = new JoystickEmitter(BOUNDS, (v, w) => sent.push([v, w]));
    stick.update(0, 1);
    expect(sent.length).toBe(1); // immediate command on engage
    vi.advanceTimersByTime(1000);
    expect(sent.length).toBe(11); // plus 10 Hz cadence
    stick.release();
    vi.advanceTimersByTime(1000);
    expect(sent.length).toBe(11); // silence after release
    for (const [v] of sent) expect(v).toBe(1.2);
  });

  it("tracks the latest vector between ticks", () => {
    const sent: Array<[number, number]> = [];
    const stick = new JoystickEmitter(BOUNDS, (v, w) => sent.push([v, w]));
    stick.update(0, 1);
    stick.update(0, 0.5);
    vi.advanceTimersByTime(100);
    expect(sent[sent.length - 1][0]).toBeCloseTo(0.6, 12);
    stick.release();
  });
});
