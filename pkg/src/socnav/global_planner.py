"""Cost-aware A* over the composed costmap.

Produces the global path, the horizon reference poses consumed by the
local planner, and the path-deviation metric against a ground-truth
polyline.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .costmap import Costmap, LETHAL_COST
from .gridworld import Pose2D


class NoPathError(RuntimeError):
    """Goal not reachable from start on the non-lethal grid."""


@dataclass(frozen=True)
class AstarWeights:
    cost_weight: float = 10.0  # alpha; 0 reduces to plain shortest path
    heuristic: str = "euclidean"

    def __post_init__(self):
        if self.cost_weight < 0:
            raise ValueError("cost_weight must be non-negative")
        if self.heuristic != "euclidean":
            raise ValueError(f"unknown heuristic {self.heuristic!r}")


@dataclass(frozen=True)
class GlobalPath:
    """Cell-center waypoints from start to goal (8-connected steps)."""

    waypoints: np.ndarray = field(repr=False)  # (n, 2) world meters
    total_length: float = 0.0
    total_cost: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "waypoints",
                           np.asarray(self.waypoints, dtype=float))


# 8-neighborhood; diagonal steps cost sqrt(2) per cell.
_NEIGHBORS = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
              (1, 1, math.sqrt(2)), (1, -1, math.sqrt(2)),
              (-1, 1, math.sqrt(2)), (-1, -1, math.sqrt(2))]


def step_weight(step_length: float, cell_cost: int, alpha: float) -> float:
    """Traversal weight of one step entering a cell: length scaled up by the
    normalized cell cost."""
    return step_length * (1.0 + alpha * cell_cost / LETHAL_COST)


def plan_astar(costmap: Costmap, start: tuple[int, int], goal: tuple[int, int],
               weights: AstarWeights = AstarWeights()) -> GlobalPath:
    """Minimize the summed step weights from start to goal.

    The Euclidean-distance heuristic is admissible because every step weight
    is at least the step length. Ties break on lower heuristic, then
    row-major cell order, for deterministic plans.
    """
    w, h = costmap.width_cells, costmap.height_cells
    cost = costmap.cost
    res = costmap.resolution

    for name, cell in (("start", start), ("goal", goal)):
        ix, iy = cell
        if not (0 <= ix < w and 0 <= iy < h):
            raise ValueError(f"{name} cell {cell} out of bounds")
        if cost[iy, ix] >= LETHAL_COST:
            raise ValueError(f"{name} cell {cell} is lethal")

    def heur(ix, iy):
        return math.hypot(ix - goal[0], iy - goal[1]) * res

    g = {start: 0.0}
    parent = {}
    h0 = heur(*start)
    frontier = [(h0, h0, start[1] * w + start[0], start)]
    closed = set()

    while frontier:
        f, _, _, cell = heapq.heappop(frontier)
        if cell in closed:
            continue
        if cell == goal:
            break
        closed.add(cell)
        ix, iy = cell
        gc = g[cell]
        for dx, dy, step in _NEIGHBORS:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            c = cost[ny, nx]
            if c >= LETHAL_COST:
                continue
            ng = gc + step_weight(step * res, int(c), weights.cost_weight)
            nb = (nx, ny)
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                parent[nb] = cell
                hn = heur(nx, ny)
                heapq.heappush(frontier, (ng + hn, hn, ny * w + nx, nb))
    else:
        raise NoPathError(f"no path from {start} to {goal}")

    if goal not in g:
        raise NoPathError(f"no path from {start} to {goal}")

    cells = [goal]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    cells.reverse()

    ox, oy = costmap.origin
    pts = np.array([[ox + (ix + 0.5) * res, oy + (iy + 0.5) * res]
                    for ix, iy in cells])
    seg = np.diff(pts, axis=0)
    total_len = float(np.hypot(seg[:, 0], seg[:, 1]).sum()) if len(pts) > 1 else 0.0
    return GlobalPath(waypoints=pts, total_length=total_len,
                      total_cost=g[goal])


def _project_to_polyline(point, pts: np.ndarray) -> tuple[float, float]:
    """(arc length of, distance to) the nearest point on the polyline."""
    p = np.asarray(point, dtype=float)
    if len(pts) == 1:
        return 0.0, float(np.hypot(*(p - pts[0])))
    best_d, best_s = math.inf, 0.0
    s_acc = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        seg_len = float(np.hypot(*ab))
        if seg_len == 0.0:
            d = float(np.hypot(*(p - a)))
            t = 0.0
        else:
            t = float(np.clip(np.dot(p - a, ab) / seg_len**2, 0.0, 1.0))
            d = float(np.hypot(*(p - (a + t * ab))))
        if d < best_d - 1e-12:
            best_d = d
            best_s = s_acc + t * seg_len
        s_acc += seg_len
    return best_s, best_d


def _point_at_arclength(pts: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """Point and tangent heading at arc length s (clamped). At a vertex the
    outgoing segment's tangent wins, so headings flip exactly at corners."""
    seg = np.diff(pts, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    total = float(lens.sum())
    s = min(max(s, 0.0), total)
    acc = 0.0
    for i, L in enumerate(lens):
        if L == 0.0:
            continue
        # Strict < so a sample exactly on a vertex falls into the next segment.
        if s < acc + L or i == len(lens) - 1:
            t = (s - acc) / L
            pt = pts[i] + t * seg[i]
            return pt, math.atan2(seg[i, 1], seg[i, 0])
        acc += L
    return pts[-1].copy(), 0.0


def path_to_reference(path: GlobalPath, robot: Pose2D, cruise_speed: float,
                      T: float, N: int) -> list[Pose2D]:
    """N reference poses spaced cruise_speed*T apart along the path, starting
    one step ahead of the robot's projection, clamped at the goal."""
    pts = path.waypoints
    if len(pts) == 0:
        raise ValueError("empty path")
    if N < 1 or T <= 0:
        raise ValueError("need N >= 1 and T > 0")
    if len(pts) == 1:
        return [Pose2D(pts[0][0], pts[0][1], robot.theta)] * N

    s0, _ = _project_to_polyline((robot.x, robot.y), pts)
    refs = []
    for i in range(1, N + 1):
        pt, heading = _point_at_arclength(pts, s0 + i * cruise_speed * T)
        refs.append(Pose2D(pt[0], pt[1], heading))
    return refs


def path_error(path: GlobalPath, ground_truth) -> float:
    """Mean distance from the path's waypoints to the ground-truth polyline."""
    truth = np.asarray(ground_truth, dtype=float)
    pts = path.waypoints
    if len(pts) == 0 or len(truth) == 0:
        raise ValueError("path and ground truth must be non-empty")
    return float(np.mean([_project_to_polyline(p, truth)[1] for p in pts]))
