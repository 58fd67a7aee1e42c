"""Command-line interface: run episodes, compare planners, plan global
paths, and serve the live bridge."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .costmap import UpfParams, build_costmap
from .global_planner import AstarWeights, path_error, plan_astar
from .gridworld import load_pgm, world_to_grid
from .harness import (MetricsRow, comparison_csv, compare_planners,
                      load_scenario, plan_global, run_episode)
from .local_planner import VARIANTS


def _parse_point(text: str) -> tuple[float, float]:
    x, y = text.split(",")
    return (float(x), float(y))


def _parse_opt(text: str) -> tuple[str, object]:
    """KEY=VALUE planner option; VALUE parsed as JSON when possible, so
    numbers, booleans, and lists like Q_s=[10,10,1] all work."""
    key, _, raw = text.partition("=")
    if not key or not raw:
        raise ValueError(f"expected KEY=VALUE, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if isinstance(value, list):
        value = tuple(value)
    return key, value


def _with_planner_opts(scenario, opts):
    if not opts:
        return scenario
    from dataclasses import replace

    overrides = dict(scenario.planner_overrides)
    for text in opts:
        key, value = _parse_opt(text)
        overrides[key] = value
    return replace(scenario, planner_overrides=overrides)


def _cmd_run(args) -> int:
    scenario = _with_planner_opts(load_scenario(args.scenario), args.planner_opt)
    user_script = None
    if args.user_script:
        raw = json.loads(Path(args.user_script).read_text())
        user_script = [(float(t), float(v), float(w)) for t, v, w in raw]
    log, metrics = run_episode(scenario, variant=args.planner,
                               user_script=user_script, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.to_jsonl(out / "episode.jsonl")
    row = {"variant": args.planner, "seed": args.seed,
           **{k: getattr(metrics, k) for k in MetricsRow.FIELDS}}
    (out / "metrics.csv").write_text(comparison_csv([row], timing=args.timing))
    print(f"wrote {out / 'episode.jsonl'} and {out / 'metrics.csv'}",
          file=sys.stderr)
    print(f"success={metrics.success} collided={metrics.collided} "
          f"time={metrics.time:.2f}s min_dist={metrics.min_dist:.3f}m",
          file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    scenario = _with_planner_opts(load_scenario(args.scenario), args.planner_opt)
    variants = args.planners.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = compare_planners(scenario, variants, seeds)
    csv_text = comparison_csv(rows, timing=args.timing)
    if args.csv:
        Path(args.csv).write_text(csv_text)
        print(f"wrote {args.csv}", file=sys.stderr)
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_plan_global(args) -> int:
    start = _parse_point(args.start)
    goal = _parse_point(args.goal)
    pref = _parse_point(args.pref) if args.pref else None

    map_path = Path(args.map)
    if map_path.suffix == ".pgm":
        grid = load_pgm(map_path, resolution=args.resolution)
        truth = None
    else:
        scenario = load_scenario(args.map)
        grid = scenario.grid
        truth = scenario.ground_truth_path
        if pref is None and args.use_scenario_pref:
            pref = scenario.preference_point
    if args.truth:
        truth = json.loads(Path(args.truth).read_text())

    upf = UpfParams(preference_point=pref, robot_position=start) if pref else None
    t0 = time.perf_counter()
    costmap = build_costmap(grid, upf)
    start_cell = world_to_grid(start, grid)
    goal_cell = world_to_grid(goal, grid)
    if start_cell is None or goal_cell is None:
        print("start or goal outside the map", file=sys.stderr)
        return 2
    path = plan_astar(costmap, start_cell, goal_cell,
                      AstarWeights(cost_weight=args.alpha))
    plan_wall = time.perf_counter() - t0

    result = {"path": [[x, y] for x, y in path.waypoints],
              "total_length": path.total_length,
              "total_cost": path.total_cost,
              "error": path_error(path, truth) if truth is not None else None}
    text = json.dumps(result, separators=(",", ":")) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    print(f"planned in {plan_wall * 1e3:.1f} ms", file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    from .bridge import serve  # deferred: pulls in websockets

    scenario = load_scenario(args.scenario)
    print(f"serving {scenario.name} on ws://{args.host}:{args.port} "
          f"(variant {args.planner})", file=sys.stderr)
    serve(scenario, port=args.port, host=args.host, variant=args.planner,
          seed=args.seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="socnav",
                                description="Socially-aware shared-control "
                                            "navigation simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario episode")
    run.add_argument("--scenario", required=True)
    run.add_argument("--planner", default="ss-mpc-dcbf", choices=VARIANTS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--user-script", default=None,
                     help="JSON [[t, v, omega], ...] of timed user commands")
    run.add_argument("--timing", action="store_true",
                     help="fill the wall-clock plan_time column "
                          "(breaks byte-for-byte reproducibility)")
    run.add_argument("--planner-opt", action="append", metavar="KEY=VALUE",
                     help="override a planner config field (repeatable), "
                          "e.g. --planner-opt gamma=0.3")
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="sweep planner variants x seeds")
    cmp_.add_argument("--scenario", required=True)
    cmp_.add_argument("--planners", default=",".join(VARIANTS))
    cmp_.add_argument("--seeds", default="0")
    cmp_.add_argument("--csv", default=None, help="output file (default stdout)")
    cmp_.add_argument("--timing", action="store_true")
    cmp_.add_argument("--planner-opt", action="append", metavar="KEY=VALUE")
    cmp_.set_defaults(func=_cmd_compare)

    pg = sub.add_parser("plan-global", help="plan a global path on a map")
    pg.add_argument("--map", required=True,
                    help="scenario JSON (or bundled name) or .pgm graymap")
    pg.add_argument("--start", required=True, metavar="X,Y")
    pg.add_argument("--goal", required=True, metavar="X,Y")
    pg.add_argument("--pref", default=None, metavar="X,Y",
                    help="preference point enabling the preference field")
    pg.add_argument("--use-scenario-pref", action="store_true",
                    help="take the preference point from the scenario file")
    pg.add_argument("--truth", default=None,
                    help="JSON [[x, y], ...] ground-truth polyline")
    pg.add_argument("--alpha", type=float, default=10.0,
                    help="cost weight of the A* edge weighting")
    pg.add_argument("--resolution", type=float, default=0.05,
                    help="m/cell when --map is a .pgm")
    pg.add_argument("--out", default=None, help="output file (default stdout)")
    pg.set_defaults(func=_cmd_plan_global)

    srv = sub.add_parser("serve", help="serve the live bridge")
    srv.add_argument("--scenario", required=True)
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--planner", default="ss-mpc-dcbf", choices=VARIANTS)
    srv.add_argument("--seed", type=int, default=None)
    srv.set_defaults(func=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
