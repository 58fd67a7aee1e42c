"""Deterministic closed-loop world: unicycle robot kinematics, scripted and
reciprocal pedestrian policies, and planar synthetic range scans.

The reciprocal policy is a velocity-sampling stand-in for a full reciprocal
avoidance library: agents score a fixed candidate set by deviation from
their preferred velocity plus imminence of the soonest collision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gridworld import OccupancyGrid, Pose2D, raycast_batch, wrap_angle

DEFAULT_TICK = 0.1           # s
DEFAULT_PED_SPEED = 1.2      # m/s, normal walking speed
DEFAULT_PED_RADIUS = 0.3     # m
DEFAULT_ROBOT_RADIUS = 0.6   # m, circumscribed wheelchair footprint
DEFAULT_BEAM_COUNT = 360
DEFAULT_MAX_RANGE = 10.0     # m

# Reciprocal-policy scoring: w1 * |v_cand - v_pref| + w2 / (ttc + eps),
# plus a next-step penetration term that stays informative once the margin
# envelopes already overlap (where ttc is flat zero).
_RECIP_DIRECTIONS = 48
_RECIP_SPEED_FRACTIONS = (1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0)
_RECIP_W1 = 1.0
_RECIP_W2 = 1.0
_RECIP_W3 = 25.0
_RECIP_EPS = 0.2
_RECIP_MARGIN = 0.15        # m added in ttc so agents do not graze each other
_RECIP_ROBOT_MARGIN = 0.45  # crowds give the wheelchair a wider berth
_GOAL_TOLERANCE = 0.1


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    last_input: tuple[float, float] = (0.0, 0.0)  # (v, omega)
    radius: float = DEFAULT_ROBOT_RADIUS

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("robot radius must be positive")

    @property
    def velocity(self) -> np.ndarray:
        v = self.last_input[0]
        return np.array([v * math.cos(self.pose.theta),
                         v * math.sin(self.pose.theta)])


@dataclass(frozen=True)
class Pedestrian:
    id: int
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    radius: float = DEFAULT_PED_RADIUS
    policy: str = "scripted"  # scripted | reciprocal
    waypoints: tuple = ()     # ((time_s, (x, y)), ...) for scripted agents
    goal: tuple[float, float] | None = None
    preferred_speed: float = DEFAULT_PED_SPEED

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("pedestrian radius must be positive")
        if self.preferred_speed < 0:
            raise ValueError("preferred speed must be non-negative")
        if self.policy not in ("scripted", "reciprocal"):
            raise ValueError(f"unknown pedestrian policy {self.policy!r}")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))


@dataclass(frozen=True)
class Scan:
    stamp: float
    beam_count: int
    angles: np.ndarray
    ranges: np.ndarray
    max_range: float
    origin: tuple[float, float]  # sensor position the ranges are measured from

    def endpoints(self) -> np.ndarray:
        """World endpoints of beams that hit something; misses (range equal
        to max_range) are dropped."""
        hit = self.ranges < self.max_range
        a = self.angles[hit]
        r = self.ranges[hit]
        return np.column_stack([self.origin[0] + r * np.cos(a),
                                self.origin[1] + r * np.sin(a)])


def step_robot(state: RobotState, u, T: float) -> RobotState:
    """Forward-Euler unicycle step: the pose advances along the current
    heading at v and rotates at omega."""
    if T <= 0:
        raise ValueError("step time must be positive")
    v, omega = float(u[0]), float(u[1])
    p = state.pose
    return replace(state,
                   pose=Pose2D(p.x + v * math.cos(p.theta) * T,
                               p.y + v * math.sin(p.theta) * T,
                               wrap_angle(p.theta + omega * T)),
                   last_input=(v, omega))


def _active_waypoint(waypoints, t: float):
    """Target of the schedule entry with the largest start time <= t."""
    active = None
    for start, target in waypoints:
        if start <= t:
            active = target
        else:
            break
    return active


def _reciprocal_velocity(ped: Pedestrian, others) -> np.ndarray:
    to_goal = np.asarray(ped.goal, dtype=float) - ped.position
    dist = float(np.hypot(*to_goal))
    if dist < _GOAL_TOLERANCE:
        v_pref = np.zeros(2)
        base = 0.0
    else:
        v_pref = to_goal / dist * min(ped.preferred_speed, dist / DEFAULT_TICK)
        base = math.atan2(to_goal[1], to_goal[0])

    # Directions fan out from the goal heading, left before right, so a
    # symmetric encounter resolves the same way for both agents (each steps
    # to its own left) instead of hinging on rounding noise.
    offsets = [0]
    for j in range(1, _RECIP_DIRECTIONS // 2):
        offsets.extend((j, -j))
    offsets.append(_RECIP_DIRECTIONS // 2)
    angles = base + 2.0 * math.pi * np.array(offsets) / _RECIP_DIRECTIONS
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    speeds = np.array(_RECIP_SPEED_FRACTIONS) * ped.preferred_speed
    fan = (dirs[:, None, :] * speeds[None, :, None]).reshape(-1, 2)
    C = np.vstack([v_pref, fan])  # the preferred velocity itself goes first

    scores = _RECIP_W1 * np.hypot(C[:, 0] - v_pref[0], C[:, 1] - v_pref[1])
    if others:
        Q = np.array([q for q, _, _ in others])
        W = np.array([w for _, w, _ in others])
        R = np.array([r for _, _, r in others])
        dp = Q - ped.position          # (m, 2)
        dv = W[None, :, :] - C[:, None, :]  # (n, m, 2)
        c = dp[:, 0]**2 + dp[:, 1]**2 - R**2
        a = dv[..., 0]**2 + dv[..., 1]**2
        b = dv[..., 0] * dp[None, :, 0] + dv[..., 1] * dp[None, :, 1]
        disc = b * b - a * c[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (-b - np.sqrt(np.maximum(disc, 0.0))) / a
        t = np.where((disc <= 0.0) | (a < 1e-12) | (t < 0.0), np.inf, t)
        t = np.where(c[None, :] <= 0.0, 0.0, t)  # already overlapping
        ttc = t.min(axis=1)
        gap = (Q + W * DEFAULT_TICK)[None, :, :] - (
            ped.position + C * DEFAULT_TICK)[:, None, :]
        depth = np.maximum(0.0, R[None, :] - np.hypot(gap[..., 0], gap[..., 1]))
        scores = (scores + _RECIP_W2 / (ttc + _RECIP_EPS)
                  + _RECIP_W3 * (depth**2).sum(axis=1))

    best, best_score = 0, math.inf
    for i, score in enumerate(scores):  # earlier candidates win exact ties
        if score < best_score - 1e-9:
            best, best_score = i, score
    return C[best].copy()


def step_pedestrians(peds: list[Pedestrian], robot: RobotState, T: float,
                     t: float) -> list[Pedestrian]:
    """Advance all pedestrians one tick; updates are synchronous, so list
    order does not affect the outcome."""
    if T <= 0:
        raise ValueError("step time must be positive")
    out = []
    for ped in peds:
        if ped.policy == "scripted":
            target = _active_waypoint(ped.waypoints, t)
            if target is None:
                vel = np.zeros(2)
            else:
                diff = np.asarray(target, dtype=float) - ped.position
                dist = float(np.hypot(*diff))
                if dist < 1e-12:
                    vel = np.zeros(2)
                else:
                    speed = min(ped.preferred_speed, dist / T)  # no overshoot
                    vel = diff / dist * speed
        else:
            others = [(q.position, q.velocity,
                       ped.radius + q.radius + _RECIP_MARGIN)
                      for q in peds if q.id != ped.id]
            others.append((np.array([robot.pose.x, robot.pose.y]),
                           robot.velocity,
                           ped.radius + robot.radius + _RECIP_ROBOT_MARGIN))
            vel = _reciprocal_velocity(ped, others)
        out.append(replace(ped, position=ped.position + vel * T, velocity=vel))
    return out


def synth_scan(robot: RobotState, grid: OccupancyGrid, peds: list[Pedestrian],
               beam_count: int = DEFAULT_BEAM_COUNT,
               max_range: float = DEFAULT_MAX_RANGE,
               stamp: float = 0.0, noise_sigma: float = 0.0,
               rng: np.random.Generator | None = None) -> Scan:
    """One raycast per beam against the static grid plus pedestrian circles.

    Beams are uniform in the sensor frame and reported as absolute world
    angles. Occlusion falls out of first-hit semantics: a pedestrian behind
    a wall yields no endpoint.
    """
    circles = [((p.position[0], p.position[1]), p.radius) for p in peds]
    origin = (robot.pose.x, robot.pose.y)
    angles = np.array([wrap_angle(robot.pose.theta + 2.0 * math.pi * i / beam_count)
                       for i in range(beam_count)])
    ranges, hits = raycast_batch(origin, angles, max_range, grid, circles)
    if noise_sigma > 0.0 and rng is not None:
        noisy = ranges + rng.normal(0.0, noise_sigma, size=beam_count)
        ranges = np.where(hits, np.clip(noisy, 1e-6, max_range), ranges)
    return Scan(stamp=stamp, beam_count=beam_count, angles=angles,
                ranges=ranges, max_range=max_range, origin=origin)


@dataclass(frozen=True)
class WorldSnapshot:
    """Ground-truth view of one tick, safe to share across contexts."""
    t: float
    robot: RobotState
    pedestrians: tuple[Pedestrian, ...]
    collision: bool       # contact happened this tick
    collided_ever: bool   # latched across the episode


class World:
    """Owns all mutable simulation state; step() is the only mutator."""

    def __init__(self, grid: OccupancyGrid, robot: RobotState,
                 pedestrians: list[Pedestrian], T: float = DEFAULT_TICK,
                 beam_count: int = DEFAULT_BEAM_COUNT,
                 max_range: float = DEFAULT_MAX_RANGE,
                 noise_sigma: float = 0.0, seed: int = 0):
        self.grid = grid
        self.robot = robot
        self.pedestrians = list(pedestrians)
        self.T = T
        self.t = 0.0
        self.beam_count = beam_count
        self.max_range = max_range
        self.noise_sigma = noise_sigma
        self.collided_ever = False
        self._rng = np.random.default_rng(seed)

    def scan(self) -> Scan:
        return synth_scan(self.robot, self.grid, self.pedestrians,
                          self.beam_count, self.max_range, stamp=self.t,
                          noise_sigma=self.noise_sigma, rng=self._rng)

    def snapshot(self, collision: bool = False) -> WorldSnapshot:
        return WorldSnapshot(t=self.t, robot=self.robot,
                             pedestrians=tuple(self.pedestrians),
                             collision=collision,
                             collided_ever=self.collided_ever)

    def min_separation(self) -> float:
        """Smallest surface-to-surface robot-pedestrian distance (can be
        negative while overlapping)."""
        if not self.pedestrians:
            return math.inf
        p = np.array([self.robot.pose.x, self.robot.pose.y])
        return min(float(np.hypot(*(ped.position - p))) - self.robot.radius - ped.radius
                   for ped in self.pedestrians)

    def step(self, u) -> WorldSnapshot:
        """Apply one planner command: move the robot, step the pedestrians,
        advance the clock, and report the resulting ground truth."""
        self.robot = step_robot(self.robot, u, self.T)
        self.pedestrians = step_pedestrians(self.pedestrians, self.robot,
                                            self.T, self.t)
        self.t += self.T
        collision = self.min_separation() < 0.0
        if collision:
            self.collided_ever = True
        return self.snapshot(collision)


def step_world(world: World, planner_command) -> tuple[WorldSnapshot, Scan]:
    """Convenience wrapper: step then synthesize the next scan."""
    snap = world.step(planner_command)
    return snap, world.scan()
