"""Occupancy grid, world/grid transforms, and ray casting.

Shared geometric substrate for the costmap, simulator, and perception
modules. Grids are immutable once constructed; cell (0, 0) sits at the
world origin corner and cells are addressed as (ix, iy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_RESOLUTION = 0.05  # m/cell


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]. In-range values pass through
    unchanged so repeated wrapping never drifts by an ulp."""
    if -math.pi < a <= math.pi:
        return a
    return math.pi - (math.pi - a) % (2.0 * math.pi)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class OccupancyGrid:
    """Binary occupancy grid. ``cells[iy, ix]`` is True where occupied."""

    width_cells: int
    height_cells: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    cells: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.width_cells <= 0 or self.height_cells <= 0:
            raise ValueError("grid extents must be positive")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        cells = self.cells
        if cells is None:
            cells = np.zeros((self.height_cells, self.width_cells), dtype=bool)
        else:
            cells = np.asarray(cells, dtype=bool)
            if cells.shape != (self.height_cells, self.width_cells):
                raise ValueError("cells shape does not match extents")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def width_m(self) -> float:
        return self.width_cells * self.resolution

    @property
    def height_m(self) -> float:
        return self.height_cells * self.resolution

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        ix, iy = cell
        return 0 <= ix < self.width_cells and 0 <= iy < self.height_cells

    def is_occupied(self, cell: tuple[int, int]) -> bool:
        return bool(self.cells[cell[1], cell[0]])


def world_to_grid(point, grid: OccupancyGrid) -> tuple[int, int] | None:
    """Map a world point to its cell index, or None when out of bounds."""
    ix = math.floor((point[0] - grid.origin[0]) / grid.resolution)
    iy = math.floor((point[1] - grid.origin[1]) / grid.resolution)
    if not grid.in_bounds((ix, iy)):
        return None
    return (ix, iy)


def grid_to_world(cell: tuple[int, int], grid: OccupancyGrid) -> tuple[float, float]:
    """World coordinates of a cell center."""
    x = grid.origin[0] + (cell[0] + 0.5) * grid.resolution
    y = grid.origin[1] + (cell[1] + 0.5) * grid.resolution
    return (x, y)


def _ray_circle(ox, oy, dx, dy, cx, cy, r) -> float | None:
    """Smallest non-negative ray parameter hitting the circle, else None."""
    fx, fy = ox - cx, oy - cy
    b = dx * fx + dy * fy
    c0 = fx * fx + fy * fy - r * r
    disc = b * b - c0
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t = -b - sq
    if t >= 0.0:
        return t
    t = -b + sq
    if t >= 0.0:
        return 0.0  # origin inside the circle
    return None


def _ray_grid(ox, oy, dx, dy, grid: OccupancyGrid, max_range: float) -> float | None:
    """Exact voxel walk (Amanatides-Woo); returns entry distance of the
    first occupied cell along the ray, or None."""
    res = grid.resolution
    gx0, gy0 = grid.origin
    gx1 = gx0 + grid.width_m
    gy1 = gy0 + grid.height_m

    # Clip the ray to the grid AABB so walks starting outside still work.
    t0, t1 = 0.0, max_range
    for o, d, lo, hi in ((ox, dx, gx0, gx1), (oy, dy, gy0, gy1)):
        if abs(d) < 1e-15:
            if o < lo or o > hi:
                return None
        else:
            ta, tb = (lo - o) / d, (hi - o) / d
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
    if t0 > t1:
        return None

    eps = 1e-9
    px = ox + (t0 + eps) * dx
    py = oy + (t0 + eps) * dy
    ix = min(max(math.floor((px - gx0) / res), 0), grid.width_cells - 1)
    iy = min(max(math.floor((py - gy0) / res), 0), grid.height_cells - 1)
    if grid.cells[iy, ix]:
        return t0

    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    # Parameter value at which the ray crosses the next cell boundary.
    if dx != 0.0:
        nx = gx0 + (ix + (step_x > 0)) * res
        t_max_x = (nx - ox) / dx
        t_dx = res / abs(dx)
    else:
        t_max_x, t_dx = math.inf, math.inf
    if dy != 0.0:
        ny = gy0 + (iy + (step_y > 0)) * res
        t_max_y = (ny - oy) / dy
        t_dy = res / abs(dy)
    else:
        t_max_y, t_dy = math.inf, math.inf

    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_dx
            ix += step_x
        else:
            t = t_max_y
            t_max_y += t_dy
            iy += step_y
        if t > t1 or not grid.in_bounds((ix, iy)):
            return None
        if grid.cells[iy, ix]:
            return t


def raycast(origin, angle: float, max_range: float, grid: OccupancyGrid,
            circles=()) -> tuple[float, bool]:
    """First hit along the ray against the grid and a set of circles.

    circles: iterable of ((cx, cy), r). Returns (distance, hit); distance is
    max_range when nothing is hit. Circles are tested analytically so moving
    agents are not aliased to the grid.
    """
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = math.cos(angle), math.sin(angle)

    best = max_range
    hit = False
    t = _ray_grid(ox, oy, dx, dy, grid, max_range)
    if t is not None and t < best:
        best, hit = t, True
    for (cx, cy), r in circles:
        t = _ray_circle(ox, oy, dx, dy, float(cx), float(cy), float(r))
        if t is not None and t < best:
            best, hit = t, True
    return (best, hit)


def raycast_batch(origin, angles: np.ndarray, max_range: float,
                  grid: OccupancyGrid, circles=()) -> tuple[np.ndarray, np.ndarray]:
    """raycast() over many beams at once; the voxel walks advance in
    lockstep as numpy vectors. Returns (distances, hit flags)."""
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    angles = np.asarray(angles, dtype=float)
    n = len(angles)
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = np.cos(angles), np.sin(angles)

    res = grid.resolution
    gx0, gy0 = grid.origin
    gx1 = gx0 + grid.width_m
    gy1 = gy0 + grid.height_m

    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.zeros(n)
        t1 = np.full(n, max_range)
        dead = np.zeros(n, dtype=bool)
        for o, d, lo, hi in ((ox, dx, gx0, gx1), (oy, dy, gy0, gy1)):
            par = np.abs(d) < 1e-15
            dead |= par & ((o < lo) | (o > hi))
            ta = np.where(par, -np.inf, (lo - o) / d)
            tb = np.where(par, np.inf, (hi - o) / d)
            lo_t, hi_t = np.minimum(ta, tb), np.maximum(ta, tb)
            t0 = np.maximum(t0, np.where(par, 0.0, lo_t))
            t1 = np.minimum(t1, np.where(par, max_range, hi_t))
        dead |= t0 > t1

        best = np.full(n, max_range)
        hit = np.zeros(n, dtype=bool)

        eps = 1e-9
        px = ox + (t0 + eps) * dx
        py = oy + (t0 + eps) * dy
        ix = np.clip(np.floor((px - gx0) / res).astype(int), 0, grid.width_cells - 1)
        iy = np.clip(np.floor((py - gy0) / res).astype(int), 0, grid.height_cells - 1)
        active = ~dead
        occ0 = active & grid.cells[iy, ix]
        best[occ0] = t0[occ0]
        hit[occ0] = True
        active &= ~occ0

        step_x = np.where(dx > 0, 1, -1)
        step_y = np.where(dy > 0, 1, -1)
        nzx, nzy = dx != 0.0, dy != 0.0
        t_max_x = np.where(nzx, (gx0 + (ix + (step_x > 0)) * res - ox) / dx, np.inf)
        t_dx = np.where(nzx, res / np.abs(dx), np.inf)
        t_max_y = np.where(nzy, (gy0 + (iy + (step_y > 0)) * res - oy) / dy, np.inf)
        t_dy = np.where(nzy, res / np.abs(dy), np.inf)

        # walk only the still-active beams; compress as they terminate
        idx = np.flatnonzero(active)
        ix, iy = ix[idx], iy[idx]
        t_max_x, t_max_y = t_max_x[idx], t_max_y[idx]
        t_dx, t_dy = t_dx[idx], t_dy[idx]
        sx, sy = step_x[idx], step_y[idx]
        t1a = t1[idx]
        cells = grid.cells
        w_cells, h_cells = grid.width_cells, grid.height_cells
        while len(idx):
            take_x = t_max_x < t_max_y
            t = np.where(take_x, t_max_x, t_max_y)
            ix = ix + np.where(take_x, sx, 0)
            iy = iy + np.where(take_x, 0, sy)
            t_max_x = t_max_x + np.where(take_x, t_dx, 0.0)
            t_max_y = t_max_y + np.where(take_x, 0.0, t_dy)
            alive = ((t <= t1a) & (ix >= 0) & (ix < w_cells)
                     & (iy >= 0) & (iy < h_cells))
            occ = np.zeros(len(idx), dtype=bool)
            occ[alive] = cells[iy[alive], ix[alive]]
            if occ.any():
                best[idx[occ]] = t[occ]
                hit[idx[occ]] = True
            keep = alive & ~occ
            if not keep.all():
                idx = idx[keep]
                ix, iy = ix[keep], iy[keep]
                t_max_x, t_max_y = t_max_x[keep], t_max_y[keep]
                t_dx, t_dy = t_dx[keep], t_dy[keep]
                sx, sy = sx[keep], sy[keep]
                t1a = t1a[keep]

        for (cx, cy), r in circles:
            fx, fy = ox - float(cx), oy - float(cy)
            b = dx * fx + dy * fy
            c0 = fx * fx + fy * fy - float(r)**2
            disc = b * b - c0
            valid = disc >= 0.0
            sq = np.sqrt(np.where(valid, disc, 0.0))
            tc = np.where(-b - sq >= 0.0, -b - sq,
                          np.where(-b + sq >= 0.0, 0.0, np.inf))
            tc = np.where(valid, tc, np.inf)
            closer = tc < best
            best[closer] = tc[closer]
            hit |= closer
    return best, hit


def grid_from_rectangles(size_m, resolution: float = DEFAULT_RESOLUTION,
                         origin=(0.0, 0.0), rectangles=()) -> OccupancyGrid:
    """Build a grid of size_m = (width, height) meters with axis-aligned
    rectangle obstacles [x0, y0, x1, y1] (world meters). A cell is occupied
    when its center lies inside a rectangle."""
    w = int(round(size_m[0] / resolution))
    h = int(round(size_m[1] / resolution))
    cells = np.zeros((h, w), dtype=bool)
    xs = origin[0] + (np.arange(w) + 0.5) * resolution
    ys = origin[1] + (np.arange(h) + 0.5) * resolution
    cx, cy = np.meshgrid(xs, ys)
    for x0, y0, x1, y1 in rectangles:
        if x1 < x0:
            x0, x1 = x1, x0
        if y1 < y0:
            y0, y1 = y1, y0
        cells |= (cx >= x0) & (cx <= x1) & (cy >= y0) & (cy <= y1)
    return OccupancyGrid(w, h, resolution, tuple(origin), cells)


def load_pgm(path, resolution: float = DEFAULT_RESOLUTION,
             origin=(0.0, 0.0)) -> OccupancyGrid:
    """Load an ASCII (P2) graymap as an occupancy grid.

    Image rows are top-down, so the first data row becomes the highest
    y row. Cells darker than half of maxval are occupied.
    """
    with open(path) as f:
        tokens = []
        for line in f:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: expected ASCII graymap magic 'P2'")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if len(tokens) - 4 < w * h:
        raise ValueError(f"{path}: truncated graymap data")
    vals = np.array(tokens[4:4 + w * h], dtype=float).reshape(h, w)
    cells = (vals < 0.5 * maxval)[::-1, :]
    return OccupancyGrid(w, h, resolution, tuple(origin), cells)


def save_pgm(grid: OccupancyGrid, path) -> None:
    """Write the grid in the ASCII graymap format accepted by load_pgm."""
    vals = np.where(grid.cells[::-1, :], 0, 255)
    with open(path, "w") as f:
        f.write(f"P2\n{grid.width_cells} {grid.height_cells}\n255\n")
        for row in vals:
            f.write(" ".join(str(v) for v in row) + "\n")
