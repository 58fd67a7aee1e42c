"""Scenario definition, closed-loop episode execution, metric computation,
and planner comparison sweeps.

Scenarios are JSON files with units in the field names. Episodes are fully
deterministic given (scenario, variant, seed, user script): identical
invocations produce byte-identical logs and CSVs.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .costmap import UpfParams, build_costmap
from .crowd_sim import (DEFAULT_BEAM_COUNT, DEFAULT_MAX_RANGE, DEFAULT_TICK,
                        Pedestrian, RobotState, World)
from .global_planner import AstarWeights, GlobalPath, path_to_reference, plan_astar
from .gridworld import OccupancyGrid, Pose2D, grid_from_rectangles, load_pgm, world_to_grid
from .local_planner import LocalPlanner, PlannerConfig, VARIANTS
from .perception import PerceptionConfig, PerceptionPipeline

GOAL_TOLERANCE = 0.3     # m
DEFAULT_TIMEOUT = 60.0   # s
COLLISION_GRACE = 0.5    # s of extra simulation after first contact


class ScenarioError(ValueError):
    """Scenario file rejected; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: OccupancyGrid
    robot_start: Pose2D
    goal: tuple[float, float]
    robot_radius: float
    pedestrians: tuple[Pedestrian, ...]
    preference_point: tuple[float, float] | None
    ground_truth_path: np.ndarray | None
    tick: float
    max_duration: float
    perception_overrides: dict
    planner_overrides: dict
    seed: int
    beam_count: int = DEFAULT_BEAM_COUNT
    max_range: float = DEFAULT_MAX_RANGE
    noise_sigma: float = 0.0


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing field {key!r}")
    return data[key]


def _build_grid(map_spec: dict, base_dir: Path) -> OccupancyGrid:
    resolution = float(map_spec.get("resolution_m", 0.05))
    origin = tuple(map_spec.get("origin_m", (0.0, 0.0)))
    if "pgm" in map_spec:
        return load_pgm(base_dir / map_spec["pgm"], resolution, origin)
    size = _require(map_spec, "size_m", "map")
    rects = map_spec.get("rectangles_m", [])
    return grid_from_rectangles(size, resolution, origin, rects)


def scenario_from_dict(data: dict, base_dir: Path = Path(".")) -> Scenario:
    name = _require(data, "name", "scenario")
    grid = _build_grid(_require(data, "map", "scenario"), base_dir)

    robot = _require(data, "robot", "scenario")
    start = _require(robot, "start_pose", "robot")
    goal = tuple(_require(robot, "goal_m", "robot"))
    radius = float(robot.get("radius_m", 0.6))
    start_pose = Pose2D(*start)

    peds = []
    for i, p in enumerate(data.get("pedestrians", [])):
        where = f"pedestrians[{i}]"
        policy = p.get("policy", "scripted")
        kwargs = dict(id=int(p.get("id", i)),
                      position=np.asarray(_require(p, "start_m", where), dtype=float),
                      radius=float(p.get("radius_m", 0.3)),
                      policy=policy,
                      preferred_speed=float(p.get("preferred_speed_mps", 1.2)))
        if policy == "scripted":
            wps = _require(p, "waypoints", where)
            kwargs["waypoints"] = tuple((float(t), (float(x), float(y)))
                                        for t, x, y in wps)
        elif policy == "reciprocal":
            kwargs["goal"] = tuple(_require(p, "goal_m", where))
        else:
            raise ScenarioError(f"{where}: unknown policy {policy!r}")
        try:
            peds.append(Pedestrian(**kwargs))
        except ValueError as e:
            raise ScenarioError(f"{where}: {e}") from None

    sim = data.get("sim", {})
    tick = float(sim.get("tick_s", DEFAULT_TICK))
    max_duration = float(sim.get("max_duration_s", DEFAULT_TIMEOUT))
    if max_duration <= 0:
        raise ScenarioError("sim.max_duration_s: must be positive")

    pref = data.get("preference_point_m")
    truth = data.get("ground_truth_path_m")

    scenario = Scenario(
        name=name, grid=grid, robot_start=start_pose, goal=goal,
        robot_radius=radius, pedestrians=tuple(peds),
        preference_point=tuple(pref) if pref else None,
        ground_truth_path=np.asarray(truth, dtype=float) if truth else None,
        tick=tick, max_duration=max_duration,
        perception_overrides=dict(data.get("perception", {})),
        planner_overrides=dict(data.get("planner", {})),
        seed=int(data.get("seed", 0)),
        beam_count=int(sim.get("beam_count", DEFAULT_BEAM_COUNT)),
        max_range=float(sim.get("max_range_m", DEFAULT_MAX_RANGE)),
        noise_sigma=float(sim.get("range_noise_sigma_m", 0.0)))

    for label, point in (("robot.start_pose", (start_pose.x, start_pose.y)),
                         ("robot.goal_m", goal)):
        cell = world_to_grid(point, grid)
        if cell is None:
            raise ScenarioError(f"{label}: outside the map")
        if grid.is_occupied(cell):
            raise ScenarioError(f"{label}: inside a static obstacle")
    return scenario


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (name without .json)."""
    return Path(resources.files("socnav") / "scenarios" / f"{name}.json")


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file; bare names resolve to the bundled
    scenario of that name."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = bundled_scenario_path(str(path))
    try:
        data = json.loads(p.read_text())
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file {p}: {e}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{p}: invalid JSON ({e})") from None
    return scenario_from_dict(data, p.parent)


@dataclass(frozen=True)
class MetricsRow:
    min_dist: float
    collided: bool
    time: float
    traj_length: float
    linear_vel_var: float
    angular_vel_var: float
    success: bool
    plan_time: float

    FIELDS = ("min_dist", "collided", "time", "traj_length",
              "linear_vel_var", "angular_vel_var", "success", "plan_time")


class EpisodeLog:
    """Per-tick closed-loop trace plus the terminal state."""

    def __init__(self, records: list[dict] | None = None,
                 final_state: dict | None = None):
        self.records = records if records is not None else []
        self.final_state = final_state

    def to_jsonl(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.dumps())

    def dumps(self) -> str:
        lines = [json.dumps(r, sort_keys=True, separators=(",", ":"))
                 for r in self.records]
        if self.final_state is not None:
            lines.append(json.dumps({"final": self.final_state},
                                    sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, path) -> "EpisodeLog":
        records, final = [], None
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "final" in obj:
                    final = obj["final"]
                else:
                    records.append(obj)
        return cls(records, final)


def _planner_config(scenario: Scenario, variant: str | None) -> PlannerConfig:
    overrides = dict(scenario.planner_overrides)
    overrides.setdefault("T", scenario.tick)
    overrides.setdefault("d_safe", scenario.robot_radius + 0.3 + 0.2)
    overrides.setdefault("robot_extent", scenario.robot_radius)
    cfg = PlannerConfig(**overrides)
    if variant is not None:
        cfg = cfg.with_variant(variant)
    return cfg


def _perception_config(scenario: Scenario) -> PerceptionConfig:
    return PerceptionConfig(**scenario.perception_overrides)


def plan_global(scenario: Scenario,
                weights: AstarWeights = AstarWeights(),
                use_preference: bool = True) -> GlobalPath:
    """Global plan through the scenario's costmap; the preference field is
    rebuilt from the robot's current start position."""
    upf = None
    if use_preference and scenario.preference_point is not None:
        upf = UpfParams(preference_point=scenario.preference_point,
                        robot_position=(scenario.robot_start.x,
                                        scenario.robot_start.y))
    cm = build_costmap(scenario.grid, upf)
    start = world_to_grid((scenario.robot_start.x, scenario.robot_start.y),
                          scenario.grid)
    goal = world_to_grid(scenario.goal, scenario.grid)
    return plan_astar(cm, start, goal, weights)


def _round(x: float) -> float:
    return float(f"{x:.9g}")


class EpisodeRunner:
    """One closed-loop episode, advanced tick by tick.

    The harness and the bridge service drive the same runner, so a served
    episode with no clients is identical to a batch run. Termination: goal
    within 0.3 m, collision plus grace period, or the scenario timeout.
    """

    def __init__(self, scenario: Scenario, variant: str | None = None,
                 seed: int | None = None,
                 global_path: GlobalPath | None = None):
        self.scenario = scenario
        self.variant = variant
        self.planner_cfg = _planner_config(scenario, variant)
        self.perception_cfg = _perception_config(scenario)
        self.goal = tuple(scenario.goal)
        self.preference_point = scenario.preference_point

        t0 = time.perf_counter()
        self.path = global_path if global_path is not None else plan_global(scenario)
        self.plan_time = time.perf_counter() - t0

        robot = RobotState(pose=scenario.robot_start, radius=scenario.robot_radius)
        self.world = World(scenario.grid, robot, list(scenario.pedestrians),
                           T=scenario.tick, beam_count=scenario.beam_count,
                           max_range=scenario.max_range,
                           noise_sigma=scenario.noise_sigma,
                           seed=scenario.seed if seed is None else seed)
        self.perception = PerceptionPipeline(scenario.grid, self.perception_cfg)
        self.planner = LocalPlanner(self.planner_cfg)
        self.records: list[dict] = []
        self.tracked = []
        self.success = False
        self.done = False
        self._collision_deadline = None

    @property
    def t(self) -> float:
        return self.world.t

    def submit_user_command(self, u) -> tuple[float, float]:
        """Register a live user command at the current sim time; returns the
        clamped value actually used."""
        clamped = self.planner.clamp(u)
        self.planner.note_user_command(self.world.t, clamped)
        return clamped

    def _replan(self, robot_position) -> None:
        upf = None
        if self.preference_point is not None:
            upf = UpfParams(preference_point=self.preference_point,
                            robot_position=tuple(robot_position))
        cm = build_costmap(self.scenario.grid, upf)
        start = world_to_grid(robot_position, self.scenario.grid)
        goal = world_to_grid(self.goal, self.scenario.grid)
        if start is None or goal is None:
            raise ValueError("start or goal outside the map")
        self.path = plan_astar(cm, start, goal, AstarWeights())

    def set_preference(self, point) -> None:
        """Re-center the preference field and re-plan from the robot's pose."""
        pose = self.world.robot.pose
        if tuple(point) == (pose.x, pose.y):
            raise ValueError("preference point coincides with the robot")
        self.preference_point = tuple(point)
        self._replan((pose.x, pose.y))

    def set_goal(self, goal) -> None:
        cell = world_to_grid(goal, self.scenario.grid)
        if cell is None:
            raise ValueError("goal outside the map")
        if self.scenario.grid.is_occupied(cell):
            raise ValueError("goal inside a static obstacle")
        self.goal = tuple(goal)
        pose = self.world.robot.pose
        self._replan((pose.x, pose.y))
        self.done = False
        self.success = False

    def set_variant(self, variant: str) -> None:
        self.variant = variant
        self.planner_cfg = _planner_config(self.scenario, variant)
        self.planner = LocalPlanner(self.planner_cfg)

    def tick(self) -> dict:
        """One perceive / plan / step cycle; returns the tick record."""
        world = self.world
        t = world.t
        scan = world.scan()
        self.tracked = self.perception.process(scan, self.scenario.tick)
        refs = path_to_reference(self.path, world.robot.pose,
                                 self.planner_cfg.v_bounds[1],
                                 self.scenario.tick, self.planner_cfg.N)
        t0 = time.perf_counter()
        u, diag = self.planner.plan_step(t, world.robot, refs, self.tracked)
        self.plan_time += time.perf_counter() - t0

        pose = world.robot.pose
        record = {
            "t": _round(t),
            "pose": [pose.x, pose.y, pose.theta],
            "cmd": [u[0], u[1]],
            "pedestrians": [{"id": p.id,
                             "pos": [float(p.position[0]), float(p.position[1])],
                             "vel": [float(p.velocity[0]), float(p.velocity[1])]}
                            for p in world.pedestrians],
            "min_separation": world.min_separation() if world.pedestrians else None,
            "h_min": None if math.isinf(diag["h_min"]) else diag["h_min"],
            "eta": diag["eta"],
            "collision": world.collided_ever,
            "solver": {"status": diag["status"],
                       "iterations": diag["iterations"],
                       "violation": diag["violation"]},
        }
        self.records.append(record)

        snap = world.step(u)
        if snap.collided_ever and self._collision_deadline is None:
            self._collision_deadline = world.t + COLLISION_GRACE
        d_goal = math.hypot(snap.robot.pose.x - self.goal[0],
                            snap.robot.pose.y - self.goal[1])
        if d_goal <= GOAL_TOLERANCE:
            self.success = not snap.collided_ever
            self.done = True
        elif (self._collision_deadline is not None
                and world.t >= self._collision_deadline - 1e-9):
            self.done = True
        elif world.t >= self.scenario.max_duration - 1e-9:
            self.done = True
        return record

    def log(self) -> EpisodeLog:
        pose = self.world.robot.pose
        final = {"t": _round(self.world.t),
                 "pose": [pose.x, pose.y, pose.theta],
                 "min_separation": (self.world.min_separation()
                                    if self.world.pedestrians else None),
                 "collision": self.world.collided_ever,
                 "success": self.success}
        return EpisodeLog(list(self.records), final)


def run_episode(scenario: Scenario, variant: str | None = None,
                user_script=None, seed: int | None = None,
                global_path: GlobalPath | None = None) -> tuple[EpisodeLog, MetricsRow]:
    """Full closed loop: global plan, then per-tick perceive / plan / step
    until the goal (within 0.3 m), a collision plus grace period, or the
    scenario timeout. user_script is a timed [(t, v, omega), ...] list that
    stands in for live shared-control commands."""
    runner = EpisodeRunner(scenario, variant=variant, seed=seed,
                           global_path=global_path)
    script = sorted(user_script or [], key=lambda c: c[0])
    cursor = 0
    while not runner.done:
        while cursor < len(script) and script[cursor][0] <= runner.t + 1e-9:
            _, v, w = script[cursor]
            runner.submit_user_command((v, w))
            cursor += 1
        runner.tick()
    log = runner.log()
    metrics = compute_metrics(log, scenario, plan_time=runner.plan_time)
    return log, metrics


def compute_metrics(log: EpisodeLog, scenario: Scenario,
                    plan_time: float = 0.0) -> MetricsRow:
    """Table-style metric tuple from a (possibly re-loaded) episode log."""
    if not log.records:
        raise ValueError("empty episode log")
    poses = [r["pose"] for r in log.records]
    if log.final_state is not None:
        poses.append(log.final_state["pose"])
    pts = np.asarray(poses)[:, :2]
    traj_length = float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))

    seps = [r["min_separation"] for r in log.records
            if r.get("min_separation") is not None]
    if log.final_state is not None and log.final_state.get("min_separation") is not None:
        seps.append(log.final_state["min_separation"])
    min_dist = float(max(0.0, min(seps))) if seps else math.inf

    cmds = np.asarray([r["cmd"] for r in log.records])
    lin_var = float(np.var(cmds[:, 0]))
    ang_var = float(np.var(cmds[:, 1]))

    final = log.final_state or {}
    collided = bool(final.get("collision", log.records[-1]["collision"]))
    success = bool(final.get("success", False))
    end_time = float(final.get("t", log.records[-1]["t"]))
    if collided:
        min_dist = 0.0
    return MetricsRow(min_dist=min_dist, collided=collided, time=end_time,
                      traj_length=traj_length, linear_vel_var=lin_var,
                      angular_vel_var=ang_var, success=success,
                      plan_time=plan_time)


def run_replay(scenario: Scenario, commands, seed: int | None = None) -> list[list[float]]:
    """Drive a fresh world with a recorded command sequence; used to check
    that logs close over replay."""
    if seed is None:
        seed = scenario.seed
    robot = RobotState(pose=scenario.robot_start, radius=scenario.robot_radius)
    world = World(scenario.grid, robot, list(scenario.pedestrians),
                  T=scenario.tick, beam_count=scenario.beam_count,
                  max_range=scenario.max_range,
                  noise_sigma=scenario.noise_sigma, seed=seed)
    poses = []
    for u in commands:
        snap = world.step(u)
        poses.append([snap.robot.pose.x, snap.robot.pose.y, snap.robot.pose.theta])
    return poses


def compare_planners(scenario: Scenario, variants, seeds) -> list[dict]:
    """Run every (variant, seed) pair; per-run rows followed by per-variant
    mean rows, ordered by (variant, seed)."""
    if not variants:
        raise ValueError("need at least one planner variant")
    rows = []
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown planner variant {variant!r}")
    seeds = sorted(seeds)  # output ordering is fixed regardless of call order
    for variant in variants:
        per_variant = []
        for seed in seeds:
            try:
                _, m = run_episode(scenario, variant=variant, seed=seed)
                row = {"variant": variant, "seed": seed,
                       **{k: getattr(m, k) for k in MetricsRow.FIELDS}}
            except Exception as e:  # keep the sweep going, record the failure
                row = {"variant": variant, "seed": seed, "error": str(e)}
            rows.append(row)
            per_variant.append(row)
        ok = [r for r in per_variant if "error" not in r]
        if ok:
            mean_row = {"variant": variant, "seed": "mean"}
            for k in MetricsRow.FIELDS:
                vals = [float(r[k]) for r in ok]
                mean_row[k] = sum(vals) / len(vals)
            rows.append(mean_row)
    return rows


def _fmt(value, timing: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def comparison_csv(rows: list[dict], timing: bool = False) -> str:
    """CSV with the MetricsRow columns. plan_time is wall-clock and breaks
    byte-for-byte determinism, so it stays blank unless timing is set."""
    header = ["variant", "seed", *MetricsRow.FIELDS]
    lines = [",".join(header)]
    for r in rows:
        vals = []
        for k in header:
            if k == "plan_time" and not timing:
                vals.append("")
            elif k not in r:
                vals.append("")
            else:
                vals.append(_fmt(r[k], timing))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
