// Virtual joystick: a unit-square vector maps to a (v, omega) command.
// Forward push drives at v_max, pushing right turns clockwise (negative
// omega). Commands are emitted at a fixed cadence while engaged; a
// centered stick emits nothing.

export type Bounds = { v: [number, number]; omega: [number, number] };

export const JOYSTICK_HZ = 10;
export const DEADZONE = 0.02;

export function joystickToCmd(
  vec: { x: number; y: number },
  bounds: Bounds,
): { v: number; omega: number } | null {
  const x = Math.max(-1, Math.min(1, vec.x));
  const y = Math.max(-1, Math.min(1, vec.y));
  if (Math.hypot(x, y) <= DEADZONE) {
    return null; // disengaged
  }
  // scale each half-axis so the center maps to zero
  const v = y >= 0 ? y * bounds.v[1] : -y * bounds.v[0];
  const omegaMax = bounds.omega[1];
  const omega = -x * omegaMax;
  return { v, omega };
}

export class JoystickEmitter {
  private vec = { x: 0, y: 0 };
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private bounds: Bounds,
    private send: (v: number, omega: number) => void,
    private periodMs: number = 1000 / JOYSTICK_HZ,
  ) {}

  setBounds(bounds: Bounds): void {
    this.bounds = bounds;
  }

  update(x: number, y: number): void {
    this.vec = { x, y };
    const cmd = joystickToCmd(this.vec, this.bounds);
    if (cmd && this.timer === null) {
      this.send(cmd.v, cmd.omega); // first command immediately on engage
      this.timer = setInterval(() => this.tick(), this.periodMs);
    } else if (!cmd && this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private tick(): void {
    const cmd = joystickToCmd(this.vec, this.bounds);
    if (cmd) {
      this.send(cmd.v, cmd.omega);
    }
  }

  release(): void {
    this.update(0, 0);
  }
}
