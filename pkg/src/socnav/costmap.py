"""Multi-layer costmap: static/lethal layer, inflation layer, and the
user-preference field (UPF) layer, composed by per-cell maximum.

The UPF is a radial field around a user-chosen point whose cost falls
toward the point, carving a valley that attracts the global planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .gridworld import OccupancyGrid, world_to_grid

LETHAL_COST = 254
INSCRIBED_COST = 253
DEFAULT_INFLATION_RADIUS = 0.8  # m
UPF_C_MIN = 0
UPF_C_MAX = 150  # below near-wall inflation so preference never beats proximity


@dataclass(frozen=True)
class Costmap:
    """Integer cost per cell in [0, 254]; 254 is lethal. Shares extents,
    origin and resolution with its backing grid."""

    width_cells: int
    height_cells: int
    resolution: float
    origin: tuple[float, float]
    cost: np.ndarray = field(repr=False)

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.int16)
        if cost.shape != (self.height_cells, self.width_cells):
            raise ValueError("cost shape does not match extents")
        if cost.min() < 0 or cost.max() > LETHAL_COST:
            raise ValueError("costs must lie in [0, 254]")
        cost.flags.writeable = False
        object.__setattr__(self, "cost", cost)

    def same_extents(self, other: "Costmap") -> bool:
        return (self.width_cells == other.width_cells
                and self.height_cells == other.height_cells
                and self.resolution == other.resolution
                and self.origin == other.origin)

    def dump_ascii(self, path) -> None:
        """One integer per cell, row-major, row 0 first (golden-file format)."""
        with open(path, "w") as f:
            for row in self.cost:
                f.write(" ".join(str(int(v)) for v in row) + "\n")


@dataclass(frozen=True)
class UpfParams:
    """Parameters of the preference field. sigma follows from the distance
    between robot_position and preference_point."""

    preference_point: tuple[float, float]
    robot_position: tuple[float, float]
    c_min: int = UPF_C_MIN
    c_max: int = UPF_C_MAX
    mode: str = "disk"  # disk: valley filled below sigma; literal: raw density

    def __post_init__(self):
        if not (0 <= self.c_min < self.c_max <= LETHAL_COST):
            raise ValueError("need 0 <= c_min < c_max <= 254")
        if self.mode not in ("disk", "literal"):
            raise ValueError(f"unknown UPF mode {self.mode!r}")
        dx = self.robot_position[0] - self.preference_point[0]
        dy = self.robot_position[1] - self.preference_point[1]
        if math.hypot(dx, dy) == 0.0:
            raise ValueError("robot position coincides with preference point")


def sigma_from_distance(d_r: float) -> float:
    """Spread that puts 90% of the radial distribution inside radius d_r
    (sigma = d_r / sqrt(-2 ln 0.1) ~= 0.466 d_r)."""
    if d_r <= 0:
        raise ValueError("robot-to-preference distance must be positive")
    return d_r / math.sqrt(-2.0 * math.log(0.1))


def radial_density(d, sigma: float, mode: str = "disk"):
    """Rayleigh-style density (d / sigma^2) exp(-d^2 / 2 sigma^2).

    The raw density is zero at d = 0 and peaks on the ring d = sigma; disk
    mode clamps everything inside the ring to the peak so the valley floor
    is a disk around the preference point rather than an annulus.
    """
    d = np.asarray(d, dtype=float)
    if mode == "disk":
        d = np.maximum(d, sigma)
    return (d / sigma**2) * np.exp(-(d**2) / (2.0 * sigma**2))


def density_to_cost(p, p_min: float, p_max: float, c_min: int, c_max: int):
    """Affine map sending p_max -> c_min and p_min -> c_max (denser is
    cheaper), rounded to the nearest integer."""
    if not p_min < p_max:
        raise ValueError("need p_min < p_max")
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < p_min - 1e-12) or np.any(p_arr > p_max + 1e-12):
        raise ValueError("density outside [p_min, p_max]")
    c = c_max - (p_min - p_arr) * (c_max - c_min) / (p_min - p_max)
    out = np.rint(c).astype(np.int16)
    return int(out) if np.isscalar(p) else out


def static_layer(grid: OccupancyGrid) -> Costmap:
    """Lethal cost on occupied cells, zero elsewhere."""
    cost = np.where(grid.cells, LETHAL_COST, 0).astype(np.int16)
    return Costmap(grid.width_cells, grid.height_cells, grid.resolution,
                   tuple(grid.origin), cost)


def inflation_layer(grid: OccupancyGrid,
                    radius: float = DEFAULT_INFLATION_RADIUS) -> Costmap:
    """Cost decaying linearly from 253 at the obstacle boundary to 0 at the
    inflation radius. Occupied cells themselves carry 253 here; the static
    layer supplies the lethal 254."""
    if grid.cells.any():
        dist = ndimage.distance_transform_edt(
            ~grid.cells, sampling=grid.resolution)
    else:
        dist = np.full(grid.cells.shape, np.inf)
    cost = np.zeros(grid.cells.shape, dtype=np.int16)
    inside = dist <= radius
    cost[inside] = np.rint(
        INSCRIBED_COST * (1.0 - dist[inside] / radius)).astype(np.int16)
    return Costmap(grid.width_cells, grid.height_cells, grid.resolution,
                   tuple(grid.origin), cost)


def upf_field(params: UpfParams, like: Costmap) -> Costmap:
    """Standalone preference-field layer over the extents of ``like``.

    Density is evaluated at every cell center; p_min/p_max are taken over
    the whole map so the affine cost map spans [c_min, c_max] exactly.
    """
    grid_probe = OccupancyGrid(like.width_cells, like.height_cells,
                               like.resolution, like.origin)
    if world_to_grid(params.preference_point, grid_probe) is None:
        raise ValueError("preference point lies outside the map")

    d_r = math.hypot(params.robot_position[0] - params.preference_point[0],
                     params.robot_position[1] - params.preference_point[1])
    sigma = sigma_from_distance(d_r)

    xs = like.origin[0] + (np.arange(like.width_cells) + 0.5) * like.resolution
    ys = like.origin[1] + (np.arange(like.height_cells) + 0.5) * like.resolution
    cx, cy = np.meshgrid(xs, ys)
    d = np.hypot(cx - params.preference_point[0], cy - params.preference_point[1])
    p = radial_density(d, sigma, params.mode)
    cost = density_to_cost(p, float(p.min()), float(p.max()),
                           params.c_min, params.c_max)
    return Costmap(like.width_cells, like.height_cells, like.resolution,
                   like.origin, cost)


def build_upf_layer(params: UpfParams, base: Costmap) -> Costmap:
    """Write the preference field over ``base`` cell by cell, keeping the
    per-cell maximum so obstacles and inflation are never cheapened."""
    layer = upf_field(params, base)
    return compose_layers(base, layer)


def compose_layers(*layers: Costmap | None) -> Costmap:
    """Per-cell maximum across the provided layers (None entries skipped)."""
    present = [l for l in layers if l is not None]
    if not present:
        raise ValueError("no layers to compose")
    first = present[0]
    for l in present[1:]:
        if not first.same_extents(l):
            raise ValueError("costmap layers have mismatched extents")
    cost = present[0].cost.copy()
    for l in present[1:]:
        np.maximum(cost, l.cost, out=cost)
    return Costmap(first.width_cells, first.height_cells, first.resolution,
                   first.origin, cost)


def build_costmap(grid: OccupancyGrid, upf: UpfParams | None = None,
                  inflation_radius: float = DEFAULT_INFLATION_RADIUS) -> Costmap:
    """Static + inflation layers, plus the preference field when given."""
    base = compose_layers(static_layer(grid), inflation_layer(grid, inflation_radius))
    if upf is None:
        return base
    return build_upf_layer(upf, base)
