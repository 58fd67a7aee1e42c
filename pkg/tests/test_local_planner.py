import math

import numpy as np
import pytest

from oracles import numeric_gradient
from socnav.crowd_sim import RobotState, step_robot
from socnav.gridworld import Pose2D, wrap_angle
from socnav.local_planner import (LocalPlanner, ObstaclePrediction,
                                  PlannerConfig, PlanProblem, barrier_value,
                                  blend_reference, dcbf_residual,
                                  max_violation, objective_value_and_gradient,
                                  penalized_value_and_gradient,
                                  rollout_user_commands, solve, user_weight)
from socnav.perception import social_area_from_velocity


def straight_refs(cfg, speed=None, theta=0.0):
    v = cfg.v_bounds[1] if speed is None else speed
    return [Pose2D(v * cfg.T * (i + 1) * math.cos(theta),
                   v * cfg.T * (i + 1) * math.sin(theta), theta)
            for i in range(cfg.N)]


def obstacle(cfg, pos, vel, c_scale=0.12, body=0.3):
    area = social_area_from_velocity(pos, vel, c_scale=c_scale)
    steps = np.arange(cfg.N + 1)[:, None] * cfg.T
    predictions = np.asarray(pos) + steps * np.asarray(vel)
    return ObstaclePrediction(positions=predictions, area=area, body_radius=body)


def test_barrier_value_arithmetic():
    # slow walker facing the robot: sigma_h stays at the 0.5 floor, so the
    # frontal extent is l(0) = 2 * c * sigma_h^2 = 1.0 at c = 2
    area = social_area_from_velocity((5.0, 0.0), (-0.25, 0.0), c_scale=2.0)
    h = barrier_value((0.0, 0.0), 0.5, (5.0, 0.0), area)
    assert h == pytest.approx(5.0 - 0.5 - 1.0)


def test_barrier_zero_at_touching_surfaces():
    area = social_area_from_velocity((2.0, 0.0), (-0.25, 0.0), c_scale=1.0)
    l0 = 0.5  # frontal radius at the sigma floor, c = 1
    h = barrier_value((2.0 - l0 - 0.4, 0.0), 0.4, (2.0, 0.0), area)
    assert h == pytest.approx(0.0, abs=1e-12)


def test_barrier_negative_when_overlapping():
    area = social_area_from_velocity((1.0, 0.0), (0.0, 0.0), c_scale=1.0)
    assert barrier_value((0.9, 0.0), 0.5, (1.0, 0.0), area) < 0.0


def test_dcbf_residual_substitution():
    assert dcbf_residual(1.0, 2.0, 0.5) == pytest.approx(0.0)
    assert dcbf_residual(1.1, 2.0, 0.5) > 0.0
    assert dcbf_residual(0.9, 2.0, 0.5) < 0.0


def test_dcbf_gamma_one_pure_safety():
    assert dcbf_residual(0.0, 5.0, 1.0) == pytest.approx(0.0)
    assert dcbf_residual(-0.01, 5.0, 1.0) < 0.0


def test_dcbf_boundary_forward_invariance():
    assert dcbf_residual(0.0, 0.0, 0.4) == 0.0
    assert dcbf_residual(0.01, 0.0, 0.4) > 0.0


def test_user_weight_limits():
    assert user_weight(0, 0.7) == 0.0
    assert user_weight(10_000, 0.7) == pytest.approx(1.0)
    assert user_weight(1, 0.7) == pytest.approx(1.0 - math.exp(-0.7), abs=1e-12)
    assert user_weight(1, 0.7) == pytest.approx(0.5034, abs=1e-4)


def test_user_weight_monotone():
    vals = [user_weight(i, 0.7) for i in range(20)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_rollout_zero_command_stays():
    robot = RobotState(pose=Pose2D(1.0, 2.0, 0.7))
    poses = rollout_user_commands(robot, (0.0, 0.0), 10, 0.1)
    for p in poses:
        assert (p.x, p.y, p.theta) == (1.0, 2.0, 0.7)


def test_rollout_matches_repeated_step_robot():
    robot = RobotState(pose=Pose2D(0.3, -0.2, 0.4))
    u = (1.0, 0.6)
    poses = rollout_user_commands(robot, u, 15, 0.1)
    s = robot
    for p in poses:
        s = step_robot(s, u, 0.1)
        assert p.x == pytest.approx(s.pose.x, abs=1e-12)
        assert p.y == pytest.approx(s.pose.y, abs=1e-12)
        assert p.theta == pytest.approx(s.pose.theta, abs=1e-12)


def test_blend_endpoints():
    cfg = PlannerConfig(N=5)
    g = straight_refs(cfg, theta=0.0)
    u = straight_refs(cfg, theta=1.0)
    assert blend_reference(g, u, 0.0) == g
    assert blend_reference(g, u, 1.0) == u


def test_blend_heading_shortest_arc():
    g = [Pose2D(0, 0, 0.0)]
    u = [Pose2D(1, 1, math.pi / 2)]
    out = blend_reference(g, u, 0.5)[0]
    assert out.theta == pytest.approx(math.pi / 4)
    assert (out.x, out.y) == pytest.approx((0.5, 0.5))
    # wrap-around case: 3pi/4 blended with -3pi/4 crosses pi, not zero
    g2 = [Pose2D(0, 0, 3 * math.pi / 4)]
    u2 = [Pose2D(0, 0, -3 * math.pi / 4)]
    mid = blend_reference(g2, u2, 0.5)[0]
    assert abs(wrap_angle(mid.theta)) == pytest.approx(math.pi)


def test_solve_unobstructed_matches_brute_force_oracle():
    # N = 1 so the optimum is checkable by brute force over (v, omega)
    cfg = PlannerConfig(N=1, Q_u=(0.001, 0.001))
    robot = RobotState(pose=Pose2D(0, 0, 0))
    refs = straight_refs(cfg)
    problem = PlanProblem(robot=robot, global_refs=refs)
    sol = solve(problem, cfg)

    best, best_cost = None, math.inf
    for v in np.linspace(*cfg.v_bounds, 301):
        for w in np.linspace(*cfg.omega_bounds, 301):
            c, _ = objective_value_and_gradient(problem, cfg,
                                                np.array([[v, w]]))
            if c < best_cost:
                best, best_cost = (v, w), c
    assert sol.controls[0, 0] == pytest.approx(best[0], abs=1e-2)
    assert sol.controls[0, 1] == pytest.approx(best[1], abs=1e-2)
    assert sol.controls[0, 0] == pytest.approx(cfg.v_bounds[1], abs=1e-2)
    assert abs(sol.controls[0, 1]) < 1e-2


def test_solve_fixed_point_on_reference():
    cfg = PlannerConfig()
    robot = RobotState(pose=Pose2D(2.0, 3.0, 0.4))
    refs = [Pose2D(2.0, 3.0, 0.4)] * cfg.N
    sol = solve(PlanProblem(robot=robot, global_refs=refs), cfg)
    assert sol.status == "optimal"
    assert np.abs(sol.controls).max() < 1e-3
    assert np.allclose(sol.predicted_states[:, :2], [2.0, 3.0], atol=1e-3)


def test_solve_head_on_dcbf_residuals_nonnegative():
    cfg = PlannerConfig()
    robot = RobotState(pose=Pose2D(0, 0, 0))
    refs = straight_refs(cfg)
    problem = PlanProblem(robot=robot, global_refs=refs,
                          obstacles=(obstacle(cfg, (4.0, 0.0), (-1.2, 0.0)),),
                          robot_extent=0.6)
    sol = solve(problem, cfg)
    assert sol.status in ("optimal", "max_iter")
    # independent re-evaluation of every (k, pedestrian) residual
    assert max_violation(problem, cfg, sol.controls) <= cfg.tolerance


def test_solve_infeasible_reported():
    # gamma = 1 demands instant recovery while the robot sits deep inside a
    # large social area; no bounded control can satisfy it
    cfg = PlannerConfig(N=5, gamma=1.0)
    robot = RobotState(pose=Pose2D(0, 0, 0))
    refs = [Pose2D(0, 0, 0)] * cfg.N
    big = obstacle(cfg, (0.3, 0.0), (0.0, 0.0), c_scale=8.0)
    problem = PlanProblem(robot=robot, global_refs=refs, obstacles=(big,),
                          robot_extent=0.6)
    sol = solve(problem, cfg)
    assert sol.status == "infeasible"
    assert sol.max_constraint_violation > cfg.tolerance


def test_objective_gradient_matches_finite_differences():
    rng = np.random.default_rng(12)
    worst = 0.0
    for trial in range(50):
        cfg = PlannerConfig(N=int(rng.integers(3, 15)))
        robot = RobotState(pose=Pose2D(*rng.uniform(-1, 1, size=2),
                                       rng.uniform(-3, 3)))
        refs = [Pose2D(*rng.uniform(-2, 2, size=2), rng.uniform(-3, 3))
                for _ in range(cfg.N)]
        problem = PlanProblem(robot=robot, global_refs=refs)
        U = np.column_stack([rng.uniform(*cfg.v_bounds, size=cfg.N),
                             rng.uniform(*cfg.omega_bounds, size=cfg.N)])
        _, grad = objective_value_and_gradient(problem, cfg, U)
        num = numeric_gradient(
            lambda u: objective_value_and_gradient(problem, cfg, u)[0], U)
        denom = max(np.abs(num).max(), np.abs(grad).max(), 1e-8)
        worst = max(worst, float(np.abs(grad - num).max() / denom))
    assert worst < 1e-4


def test_penalized_gradient_matches_finite_differences():
    rng = np.random.default_rng(21)
    for trial in range(10):
        cfg = PlannerConfig(N=8, cbf=bool(trial % 2),
                            social_area=bool((trial // 2) % 2))
        robot = RobotState(pose=Pose2D(0, 0, rng.uniform(-1, 1)))
        refs = straight_refs(cfg)
        obs = tuple(obstacle(cfg, rng.uniform(0.5, 3.0, size=2),
                             rng.uniform(-1, 1, size=2))
                    for _ in range(3))
        problem = PlanProblem(robot=robot, global_refs=refs, obstacles=obs,
                              robot_extent=0.6)
        U = np.column_stack([rng.uniform(*cfg.v_bounds, size=cfg.N),
                             rng.uniform(*cfg.omega_bounds, size=cfg.N)])
        _, grad = penalized_value_and_gradient(problem, cfg, U, rho=800.0)
        num = numeric_gradient(
            lambda u: penalized_value_and_gradient(problem, cfg, u, 800.0)[0],
            U)
        denom = max(np.abs(num).max(), np.abs(grad).max(), 1e-8)
        assert float(np.abs(grad - num).max() / denom) < 1e-4


def test_variant_lattice_identical_without_pedestrians():
    robot = RobotState(pose=Pose2D(0.5, -0.3, 0.2))
    sols = []
    for variant in ("mpc", "mpc-dcbf", "social-mpc", "ss-mpc-dcbf"):
        cfg = PlannerConfig().with_variant(variant)
        refs = straight_refs(cfg, theta=0.2)
        sols.append(solve(PlanProblem(robot=robot, global_refs=refs), cfg))
    base = sols[0].controls
    for s in sols[1:]:
        assert np.array_equal(s.controls, base)


def test_eta_depends_only_on_count():
    cfg = PlannerConfig()
    a = LocalPlanner(cfg)
    b = LocalPlanner(cfg)
    for k in range(5):
        a.note_user_command(k * 0.1, (0.1, 0.0))
        b.note_user_command(k * 0.1, (1000.0, -1000.0))  # clamped, still counted
    assert a.eta(0.5) == b.eta(0.5) > 0.0


def test_dcbf_slack_feasible_set_nesting():
    # tighter decay (smaller gamma) admits a subset of control sequences
    rng = np.random.default_rng(4)
    cfg1 = PlannerConfig(gamma=0.2)
    cfg2 = PlannerConfig(gamma=0.7)
    robot = RobotState(pose=Pose2D(0, 0, 0))
    refs = straight_refs(cfg1)
    # a receding pedestrian ahead-left: many forward controls stay feasible
    obs = (obstacle(cfg1, (3.0, 1.0), (0.8, 0.4)),)
    p1 = PlanProblem(robot=robot, global_refs=refs, obstacles=obs,
                     robot_extent=0.6)
    assert barrier_value((0, 0), 0.6, (3.0, 1.0), obs[0].area) > 0
    feasible1 = 0
    for _ in range(300):
        U = np.column_stack([rng.uniform(0.0, cfg1.v_bounds[1], size=cfg1.N),
                             rng.uniform(-0.4, 0.4, size=cfg1.N)])
        ok1 = max_violation(p1, cfg1, U) == 0.0
        ok2 = max_violation(p1, cfg2, U) == 0.0
        if ok1:
            feasible1 += 1
            assert ok2  # gamma1-feasible implies gamma2-feasible
    assert feasible1 > 0


def test_plan_step_eta_zero_matches_shared_off():
    robot = RobotState(pose=Pose2D(0, 0, 0))
    results = []
    for shared in (True, False):
        cfg = PlannerConfig(shared=shared)
        planner = LocalPlanner(cfg)
        refs = straight_refs(cfg)
        u, diag = planner.plan_step(0.0, robot, refs, [])
        results.append((u, diag["eta"]))
    assert results[0][0] == results[1][0]
    assert results[0][1] == results[1][1] == 0.0


def test_plan_step_braking_fallback_decays_speed():
    cfg = PlannerConfig(N=5, gamma=1.0)
    planner = LocalPlanner(cfg)
    robot = RobotState(pose=Pose2D(0, 0, 0))
    refs = [Pose2D(0.5 * (i + 1) * cfg.T, 0, 0) for i in range(cfg.N)]
    area = social_area_from_velocity((0.3, 0.0), (0.0, 0.0), c_scale=8.0)

    class Track:
        position = np.array([0.3, 0.0])
        velocity = np.zeros(2)
        body_radius = 0.3

    # build up some speed first with no obstacles
    u, _ = planner.plan_step(0.0, robot, refs, [])
    assert u[0] > 0.3
    speeds = [u[0]]
    for k in range(1, 6):
        u, diag = planner.plan_step(k * cfg.T, robot, refs, [(Track(), area)])
        assert diag["status"] == "infeasible"
        speeds.append(u[0])
        assert u[1] == 0.0
    assert all(b < a for a, b in zip(speeds, speeds[1:]) if a > 0)
    assert speeds[-1] == 0.0
