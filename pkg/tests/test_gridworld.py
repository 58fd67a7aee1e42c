import math

import numpy as np
import pytest

from socnav.gridworld import (OccupancyGrid, Pose2D, grid_from_rectangles,
                              grid_to_world, load_pgm, raycast, raycast_batch,
                              save_pgm, world_to_grid, wrap_angle)


def make_grid(size=(10, 10), res=0.05, rects=()):
    return grid_from_rectangles(size, res, rectangles=rects)


def test_world_to_grid_direct_division():
    g = make_grid()
    assert world_to_grid((0.10, 0.20), g) == (2, 4)


def test_world_to_grid_origin_is_cell_zero():
    g = make_grid()
    assert world_to_grid((0.0, 0.0), g) == (0, 0)


def test_world_to_grid_out_of_bounds_marker():
    g = make_grid()
    assert world_to_grid((-1.0, -1.0), g) is None
    assert world_to_grid((11.0, 5.0), g) is None


def test_grid_roundtrip_within_cell_diagonal():
    g = make_grid()
    rng = np.random.default_rng(3)
    diag = g.resolution * math.sqrt(2)
    for _ in range(200):
        p = rng.uniform(0, 10, size=2)
        cell = world_to_grid(p, g)
        back = grid_to_world(cell, g)
        assert math.hypot(back[0] - p[0], back[1] - p[1]) <= diag


def test_raycast_empty_world():
    g = make_grid()
    d, hit = raycast((5.0, 5.0), 0.3, 10.0, g)
    assert d == 10.0 and not hit


def test_raycast_wall_ahead():
    g = make_grid(rects=[(2.0, 0.0, 2.05, 10.0)])
    d, hit = raycast((0.0, 5.0), 0.0, 10.0, g)
    assert hit
    assert abs(d - 2.0) <= g.resolution


def test_raycast_circle_tangent_algebra():
    g = make_grid()
    d, hit = raycast((0.0, 5.0), 0.0, 10.0, g, circles=[((3.0, 5.0), 0.3)])
    assert hit
    assert d == pytest.approx(2.7, abs=1e-12)


def test_raycast_monotone_as_obstacles_added():
    g0 = make_grid()
    g1 = make_grid(rects=[(4.0, 4.0, 4.5, 6.0)])
    circles = [((6.0, 5.0), 0.4)]
    for ang in np.linspace(-math.pi, math.pi, 73):
        d0, _ = raycast((1.0, 5.0), ang, 10.0, g0)
        d1, _ = raycast((1.0, 5.0), ang, 10.0, g1)
        d2, _ = raycast((1.0, 5.0), ang, 10.0, g1, circles=circles)
        assert d1 <= d0 + 1e-12
        assert d2 <= d1 + 1e-12


def test_raycast_never_exceeds_max_range():
    g = make_grid(rects=[(8.0, 0.0, 8.2, 10.0)])
    for ang in np.linspace(-math.pi, math.pi, 37):
        d, _ = raycast((5.0, 5.0), ang, 2.5, g)
        assert d <= 2.5


def test_raycast_batch_matches_scalar():
    g = make_grid(rects=[(2.0, 1.0, 2.5, 9.0), (6.0, 0.5, 6.3, 4.0)])
    circles = [((3.0, 5.0), 0.3), ((7.0, 7.0), 0.25)]
    rng = np.random.default_rng(11)
    for _ in range(100):
        o = rng.uniform(0.5, 9.5, size=2)
        angles = rng.uniform(-math.pi, math.pi, size=8)
        db, hb = raycast_batch(o, angles, 10.0, g, circles)
        for a, dv, hv in zip(angles, db, hb):
            ds, hs = raycast(o, a, 10.0, g, circles)
            assert ds == pytest.approx(dv, abs=1e-9)
            assert hs == bool(hv)


def test_pose_normalizes_theta():
    assert Pose2D(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)
    assert Pose2D(0, 0, -math.pi).theta == pytest.approx(math.pi)
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert -math.pi < wrap_angle(-3.5 * math.pi) <= math.pi


def test_grid_validation():
    with pytest.raises(ValueError):
        OccupancyGrid(0, 10, 0.05)
    with pytest.raises(ValueError):
        OccupancyGrid(10, 10, -1.0)


def test_pgm_roundtrip(tmp_path):
    g = make_grid(size=(1.0, 0.5), res=0.1, rects=[(0.3, 0.1, 0.6, 0.3)])
    path = tmp_path / "map.pgm"
    save_pgm(g, path)
    g2 = load_pgm(path, resolution=0.1)
    assert g2.width_cells == g.width_cells
    assert g2.height_cells == g.height_cells
    assert np.array_equal(g2.cells, g.cells)


def test_pgm_rejects_bad_input(tmp_path):
    bad_magic = tmp_path / "bad.pgm"
    bad_magic.write_text("P5\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(ValueError, match="P2"):
        load_pgm(bad_magic)
    truncated = tmp_path / "short.pgm"
    truncated.write_text("P2\n4 4\n255\n0 0 0\n")
    with pytest.raises(ValueError, match="truncated"):
        load_pgm(truncated)
