"""Scan -> tracked pedestrians with social areas.

Pipeline: static-background subtraction, density-based clustering of the
remaining endpoints, constant-velocity Kalman tracking, and asymmetric
Gaussian social areas whose frontal lobe grows with walking speed.

The clustering contract is fully deterministic: clusters are connected
components of core points, and border points join the cluster of their
nearest core point (ties to the lowest core index). This makes the output
independent of expansion order and directly checkable against a
brute-force reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .crowd_sim import Scan
from .gridworld import OccupancyGrid, wrap_angle

SIGMA_H_FLOOR = 0.5  # m; personal radius of a standing person


@dataclass(frozen=True)
class PerceptionConfig:
    eps_d: float = 0.5              # m, clustering radius
    min_pts: int = 3
    background_margin: float = 0.1  # m, static-point suppression band
    process_noise: float = 0.5      # m/s^2 accel std of the CV model
    meas_noise: float = 0.05        # m
    association_gate: float = 0.8   # m
    c_scale: float = 1.0            # social-area scale factor
    max_misses: int = 5
    confirm_age: int = 2

    def __post_init__(self):
        if self.eps_d <= 0 or self.min_pts < 1 or self.c_scale <= 0:
            raise ValueError("invalid perception config")


@dataclass(frozen=True)
class Detection:
    position: np.ndarray   # endpoint centroid
    support: int           # member endpoint count
    radius: float = 0.0    # circumradius of the member endpoints

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))


@dataclass(frozen=True)
class PedestrianTrack:
    id: int
    state: np.ndarray        # (x, y, vx, vy)
    covariance: np.ndarray   # 4x4
    age: int = 1
    misses: int = 0
    body_radius: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "state", np.asarray(self.state, dtype=float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))

    @property
    def position(self) -> np.ndarray:
        return self.state[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.state[2:]


@dataclass(frozen=True)
class SocialArea:
    """Egg-shaped personal-space extent; largest ahead of motion."""
    center: np.ndarray
    heading: float
    sigma_h: float
    sigma_s: float
    sigma_r: float
    c_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


def extract_dynamic_points(scan: Scan, grid: OccupancyGrid, margin: float,
                           dist_field: np.ndarray | None = None) -> np.ndarray:
    """Endpoints farther than margin from any occupied static cell.

    Pedestrians brushing a wall are suppressed with the rest of the static
    returns; that false-negative mode is accepted.
    """
    pts = scan.endpoints()
    if len(pts) == 0:
        return pts
    if dist_field is None:
        dist_field = static_distance_field(grid)
    ix = np.clip(((pts[:, 0] - grid.origin[0]) / grid.resolution).astype(int),
                 0, grid.width_cells - 1)
    iy = np.clip(((pts[:, 1] - grid.origin[1]) / grid.resolution).astype(int),
                 0, grid.height_cells - 1)
    return pts[dist_field[iy, ix] > margin]


def static_distance_field(grid: OccupancyGrid) -> np.ndarray:
    """Distance from each cell center to the nearest occupied cell."""
    if grid.cells.any():
        return ndimage.distance_transform_edt(~grid.cells,
                                              sampling=grid.resolution)
    return np.full(grid.cells.shape, np.inf)


def dbscan_labels(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Deterministic density clustering labels; -1 marks noise.

    Core points (those with at least min_pts neighbors within eps, counting
    themselves) are linked into connected components; components are labeled
    in order of their lowest member index. Border points take the label of
    the nearest core point, ties to the lowest core index.
    """
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=int)
    tree = cKDTree(points)
    neighbors = tree.query_ball_point(points, eps)
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, -1, dtype=int)

    next_label = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = next_label
        stack = [i]
        while stack:
            j = stack.pop()
            for k in neighbors[j]:
                if core[k] and labels[k] == -1:
                    labels[k] = next_label
                    stack.append(k)
        next_label += 1

    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        best = -1
        best_d = math.inf
        for k in neighbors[i]:
            if not core[k]:
                continue
            d = float(np.hypot(*(points[i] - points[k])))
            if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and k < best):
                best, best_d = k, d
        if best >= 0:
            labels[i] = labels[best]
    return labels


def cluster_pedestrians(points: np.ndarray, cfg: PerceptionConfig) -> list[Detection]:
    """One detection per cluster at the member centroid; noise discarded."""
    points = np.asarray(points, dtype=float)
    labels = dbscan_labels(points, cfg.eps_d, cfg.min_pts)
    detections = []
    for label in range(labels.max() + 1 if len(labels) else 0):
        members = points[labels == label]
        centroid = members.mean(axis=0)
        radius = float(np.max(np.hypot(*(members - centroid).T)))
        detections.append(Detection(position=centroid, support=len(members),
                                    radius=radius))
    return detections


def _cv_matrices(T: float, accel_std: float) -> tuple[np.ndarray, np.ndarray]:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = T
    q = accel_std**2
    t2, t3, t4 = T * T, T**3 / 2.0, T**4 / 4.0
    Q = q * np.array([[t4, 0, t3, 0],
                      [0, t4, 0, t3],
                      [t3, 0, t2, 0],
                      [0, t3, 0, t2]])
    return F, Q


_H = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])


def _kf_predict(track: PedestrianTrack, F, Q) -> PedestrianTrack:
    return replace(track, state=F @ track.state,
                   covariance=F @ track.covariance @ F.T + Q)


def _kf_update(track: PedestrianTrack, z: np.ndarray, R) -> PedestrianTrack:
    P = track.covariance
    S = _H @ P @ _H.T + R
    K = P @ _H.T @ np.linalg.inv(S)
    state = track.state + K @ (z - _H @ track.state)
    P_new = (np.eye(4) - K @ _H) @ P
    P_new = 0.5 * (P_new + P_new.T)  # keep symmetry against roundoff
    return replace(track, state=state, covariance=P_new)


def track_update(tracks: list[PedestrianTrack], detections: list[Detection],
                 T: float, cfg: PerceptionConfig,
                 next_id: int = 0) -> tuple[list[PedestrianTrack], int]:
    """One predict/associate/update cycle.

    Association is greedy nearest-first within the gate. Unmatched
    detections spawn tracks with zero velocity and inflated velocity
    covariance; tracks missing for more than max_misses ticks are dropped.
    """
    if T <= 0:
        raise ValueError("step time must be positive")
    F, Q = _cv_matrices(T, cfg.process_noise)
    R = cfg.meas_noise**2 * np.eye(2)

    predicted = [_kf_predict(tr, F, Q) for tr in tracks]

    pairs = []
    for i, tr in enumerate(predicted):
        for j, det in enumerate(detections):
            d = float(np.hypot(*(det.position - tr.position)))
            if d <= cfg.association_gate:
                pairs.append((d, i, j))
    pairs.sort()

    track_of_det: dict[int, int] = {}
    det_of_track: dict[int, int] = {}
    for d, i, j in pairs:
        if i in det_of_track or j in track_of_det:
            continue
        det_of_track[i] = j
        track_of_det[j] = i

    out = []
    for i, tr in enumerate(predicted):
        if i in det_of_track:
            det = detections[det_of_track[i]]
            tr = _kf_update(tr, det.position, R)
            tr = replace(tr, age=tr.age + 1, misses=0, body_radius=det.radius)
        else:
            tr = replace(tr, age=tr.age + 1, misses=tr.misses + 1)
        if tr.misses <= cfg.max_misses:
            out.append(tr)

    for j, det in enumerate(detections):
        if j in track_of_det:
            continue
        P0 = np.diag([cfg.meas_noise**2, cfg.meas_noise**2, 4.0, 4.0])
        out.append(PedestrianTrack(id=next_id,
                                   state=np.array([det.position[0],
                                                   det.position[1], 0.0, 0.0]),
                                   covariance=P0, age=1, misses=0,
                                   body_radius=det.radius))
        next_id += 1
    return out, next_id


def social_area_from_velocity(center, velocity, c_scale: float = 1.0) -> SocialArea:
    """Egg parameters from a velocity estimate: the frontal spread is twice
    the speed, floored at the standing-person radius."""
    v = np.asarray(velocity, dtype=float)
    speed = float(np.hypot(*v))
    sigma_h = max(SIGMA_H_FLOOR, 2.0 * speed)
    return SocialArea(center=np.asarray(center, dtype=float),
                      heading=math.atan2(v[1], v[0]),
                      sigma_h=sigma_h, sigma_s=(2.0 / 3.0) * sigma_h,
                      sigma_r=0.5 * sigma_h, c_scale=c_scale)


def social_radius(area: SocialArea, delta: float) -> float:
    """Personal-space extent at bearing delta from the walking direction.

    The frontal spread applies for |delta| <= pi/2 and the rear spread
    behind; the switch coincides with the vanishing cos^2 term, so the
    radius is continuous there.
    """
    if not -math.pi < delta <= math.pi:  # re-wrapping would cost an ulp
        delta = wrap_angle(delta)
    sigma = area.sigma_h if abs(delta) <= math.pi / 2.0 else area.sigma_r
    denom = (math.cos(delta)**2 / (2.0 * sigma**2)
             + math.sin(delta)**2 / (2.0 * area.sigma_s**2))
    return area.c_scale / denom


def build_social_areas(tracks: list[PedestrianTrack],
                       cfg: PerceptionConfig) -> list[tuple[PedestrianTrack, SocialArea]]:
    """One social area per confirmed track; newborn tracks are excluded
    because their velocity is not yet observable."""
    out = []
    for tr in tracks:
        if tr.age < cfg.confirm_age:
            continue
        out.append((tr, social_area_from_velocity(tr.position, tr.velocity,
                                                  cfg.c_scale)))
    return out


class PerceptionPipeline:
    """Stateful extract -> cluster -> track -> areas cycle, one per world."""

    def __init__(self, grid: OccupancyGrid, cfg: PerceptionConfig | None = None):
        self.cfg = cfg or PerceptionConfig()
        self.grid = grid
        self.tracks: list[PedestrianTrack] = []
        self._dist_field = static_distance_field(grid)
        self._next_id = 0

    def process(self, scan: Scan, T: float) -> list[tuple[PedestrianTrack, SocialArea]]:
        points = extract_dynamic_points(scan, self.grid,
                                        self.cfg.background_margin,
                                        self._dist_field)
        detections = cluster_pedestrians(points, self.cfg)
        self.tracks, self._next_id = track_update(self.tracks, detections, T,
                                                  self.cfg, self._next_id)
        return build_social_areas(self.tracks, self.cfg)
