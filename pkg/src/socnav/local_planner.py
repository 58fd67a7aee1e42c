"""Receding-horizon shared-control local planner with dynamic control
barrier constraints, plus its three ablated baselines behind one config.

The horizon problem minimizes quadratic tracking and input costs subject to
unicycle dynamics, input bounds, and per-pedestrian safety constraints:
either barrier-decay residuals (cbf on) or plain clearance (cbf off), with
the clearance taken from egg-shaped social areas (social_area on) or fixed
radii (off). It is solved by an augmented-Lagrangian outer loop (shifted
quadratic penalty with multiplier updates) around bounded quasi-Newton
inner minimizations, warm-started from the previous tick in the controls,
the multipliers, and the penalty weight. Gradients are analytic via a
reverse sweep through the rollout.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .crowd_sim import RobotState
from .gridworld import Pose2D, wrap_angle
from .perception import SocialArea, social_radius

VARIANTS = ("mpc", "mpc-dcbf", "social-mpc", "ss-mpc-dcbf")


@dataclass(frozen=True)
class PlannerConfig:
    N: int = 20
    T: float = 0.1
    gamma: float = 0.4
    Q_s: tuple[float, float, float] = (10.0, 10.0, 1.0)
    Q_u: tuple[float, float] = (1.0, 0.5)
    Q_N: float = 10.0
    v_bounds: tuple[float, float] = (-0.3, 1.2)
    omega_bounds: tuple[float, float] = (-1.2, 1.2)
    cbf: bool = True
    social_area: bool = True
    shared: bool = True
    prediction: bool = True
    d_safe: float = 1.1  # r_robot + r_ped + 0.2, for the non-social variants
    tolerance: float = 1e-4
    max_iterations: int = 200
    eta_lambda: float = 0.7
    eta_window: float = 1.0  # s
    robot_extent: float = 0.6  # robot's own clearance radius, speed-independent
    brake_decel: float = 2.0   # m/s^2, infeasible-fallback deceleration

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.N < 1 or self.T <= 0 or self.tolerance <= 0:
            raise ValueError("invalid horizon configuration")
        if self.v_bounds[0] >= self.v_bounds[1]:
            raise ValueError("v bounds must satisfy v_min < v_max")

    def with_variant(self, name: str) -> "PlannerConfig":
        try:
            flags = _VARIANT_FLAGS[name]
        except KeyError:
            raise ValueError(f"unknown planner variant {name!r}") from None
        return replace(self, **flags)


_VARIANT_FLAGS = {
    "mpc": dict(cbf=False, social_area=False, shared=False, prediction=False),
    "mpc-dcbf": dict(cbf=True, social_area=False, shared=False, prediction=True),
    "social-mpc": dict(cbf=False, social_area=True, shared=False, prediction=True),
    "ss-mpc-dcbf": dict(cbf=True, social_area=True, shared=True, prediction=True),
}


@dataclass(frozen=True)
class ObstaclePrediction:
    """One pedestrian over the horizon: positions at steps 0..N and the
    social extent (held fixed across the horizon)."""
    positions: np.ndarray  # (N+1, 2)
    area: SocialArea
    body_radius: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "positions",
                           np.asarray(self.positions, dtype=float))


@dataclass(frozen=True)
class PlanProblem:
    robot: RobotState
    global_refs: list[Pose2D]
    user_refs: list[Pose2D] | None = None
    eta: float = 0.0
    obstacles: tuple[ObstaclePrediction, ...] = ()
    robot_extent: float = 0.6


@dataclass(frozen=True)
class PlanSolution:
    controls: np.ndarray          # (N, 2)
    predicted_states: np.ndarray  # (N+1, 3)
    cost: float
    max_constraint_violation: float
    status: str  # optimal | max_iter | infeasible
    iterations: int = 0
    penalty_mu: float = 0.0  # final penalty weight, reusable as next warm mu
    multipliers: np.ndarray | None = None  # final constraint multipliers


def barrier_value(robot_pos, l_robot: float, ped_pos, ped_area: SocialArea) -> float:
    """Signed clearance between the robot's extent and the pedestrian's
    social area along their connecting line; negative when overlapping."""
    r = np.asarray(robot_pos, dtype=float)
    p = np.asarray(ped_pos, dtype=float)
    d = float(np.hypot(*(r - p)))
    delta = wrap_angle(math.atan2(r[1] - p[1], r[0] - p[0]) - ped_area.heading)
    return d - l_robot - social_radius(ped_area, delta)


def dcbf_residual(h_next: float, h_curr: float, gamma: float) -> float:
    """Slack of the barrier-decay constraint h_next >= (1 - gamma) h_curr;
    non-negative residual means satisfied."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    return h_next - (1.0 - gamma) * h_curr

def user_weight(i: int, lam: float) -> float:
    """Authority weight from the user's command count in the window:
    0 with no input, saturating toward 1 as the count grows."""
    if i < 0 or lam <= 0:
        raise ValueError("need i >= 0 and lambda > 0")
    return 1.0 - math.exp(-lam * i)


def rollout_user_commands(robot: RobotState, u_user, N: int, T: float) -> list[Pose2D]:
    """Forward-integrate the unicycle holding the user's command constant:
    the trajectory the user is asking for."""
    x, y, theta = robot.pose.x, robot.pose.y, robot.pose.theta
    v, omega = float(u_user[0]), float(u_user[1])
    poses = []
    for _ in range(N):
        x += v * math.cos(theta) * T
        y += v * math.sin(theta) * T
        theta = wrap_angle(theta + omega * T)
        poses.append(Pose2D(x, y, theta))
    return poses


def blend_reference(global_refs: list[Pose2D], user_refs: list[Pose2D],
                    eta: float) -> list[Pose2D]:
    """Per-step blend: positions interpolate linearly, headings along the
    shortest arc from the global toward the user heading."""
    if len(global_refs) != len(user_refs):
        raise ValueError("reference lists must have equal length")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    out = []
    for g, u in zip(global_refs, user_refs):
        x = eta * u.x + (1.0 - eta) * g.x
        y = eta * u.y + (1.0 - eta) * g.y
        theta = wrap_angle(g.theta + eta * wrap_angle(u.theta - g.theta))
        out.append(Pose2D(x, y, theta))
    return out


def _wrap_vec(a: np.ndarray) -> np.ndarray:
    return np.pi - (np.pi - a) % (2.0 * np.pi)


def _rollout(x0: np.ndarray, U: np.ndarray, T: float) -> np.ndarray:
    """Vectorized Euler rollout; heading is a cumulative sum so positions
    follow in closed form."""
    N = len(U)
    X = np.empty((N + 1, 3))
    X[0] = x0
    thetas = x0[2] + T * np.concatenate([[0.0], np.cumsum(U[:, 1])])
    X[1:, 2] = thetas[1:]
    X[1:, 0] = x0[0] + T * np.cumsum(U[:, 0] * np.cos(thetas[:-1]))
    X[1:, 1] = x0[1] + T * np.cumsum(U[:, 0] * np.sin(thetas[:-1]))
    return X


class _ObstacleStack:
    """All obstacle predictions stacked for vectorized constraint math."""

    def __init__(self, obstacles, cfg: PlannerConfig, robot_extent: float):
        self.P = np.stack([o.positions for o in obstacles])      # (J, N+1, 2)
        self.heading = np.array([[o.area.heading] for o in obstacles])
        self.sigma_h = np.array([[o.area.sigma_h] for o in obstacles])
        self.sigma_s = np.array([[o.area.sigma_s] for o in obstacles])
        self.sigma_r = np.array([[o.area.sigma_r] for o in obstacles])
        self.c_scale = np.array([[o.area.c_scale] for o in obstacles])
        self.body = np.array([[o.body_radius] for o in obstacles])
        self.robot_extent = robot_extent
        self.social = cfg.social_area
        self.cbf = cfg.cbf
        self.d_safe = cfg.d_safe

    def clearances(self, pos: np.ndarray, need_grad: bool = True):
        """cl[j, k] = dist - margin for every obstacle j and step k, plus
        its gradient w.r.t. the robot position (J, N+1, 2)."""
        dvec = pos[None, :, :] - self.P
        d = np.maximum(np.hypot(dvec[..., 0], dvec[..., 1]), 1e-9)
        n = dvec / d[..., None]
        if self.social:
            delta = _wrap_vec(np.arctan2(dvec[..., 1], dvec[..., 0]) - self.heading)
            sigma = np.where(np.abs(delta) <= math.pi / 2.0,
                             self.sigma_h, self.sigma_r)
            cd, sd = np.cos(delta), np.sin(delta)
            denom = cd**2 / (2.0 * sigma**2) + sd**2 / (2.0 * self.sigma_s**2)
            l = self.c_scale / denom
            cl = d - self.robot_extent - l
            if not need_grad:
                return cl, None
            # dl/ddelta per branch; continuous because cos^2 vanishes at the switch.
            dl = -(l**2 / self.c_scale) * sd * cd * (1.0 / self.sigma_s**2
                                                     - 1.0 / sigma**2)
            perp = np.stack([-n[..., 1], n[..., 0]], axis=-1)
            grad = n - (dl / d)[..., None] * perp
            return cl, grad
        margin = (self.robot_extent + self.body) if self.cbf else self.d_safe
        cl = d - margin
        return cl, (n if need_grad else None)


def _penalty_objective(U_flat: np.ndarray, x0: np.ndarray, refs: np.ndarray,
                       stack: _ObstacleStack | None, cfg: PlannerConfig,
                       lam: np.ndarray | None, rho: float):
    """Augmented-Lagrangian cost and its analytic control gradient.

    Safety constraints g >= 0 enter through the standard shifted-penalty
    form: per constraint (max(0, lam - rho*g)^2 - lam^2) / (2 rho). With
    lam = 0 this reduces to a plain quadratic penalty; multiplier updates
    between rounds drive violations to zero at moderate rho.
    """
    N = cfg.N
    T = cfg.T
    U = U_flat.reshape(N, 2)
    X = _rollout(x0, U, T)
    qs = np.asarray(cfg.Q_s)
    qu = np.asarray(cfg.Q_u)

    err = X[1:] - refs
    err[:, 2] = _wrap_vec(err[:, 2])
    w = np.tile(qs, (N, 1))
    w[-1] *= cfg.Q_N
    cost = float(np.sum(w * err**2) + np.sum(qu * U**2))

    # Direct gradient of the cost w.r.t. each state x_1..x_N.
    d = np.zeros((N + 1, 3))
    d[1:] = 2.0 * w * err

    if stack is not None and rho > 0.0:
        cl, grad = stack.clearances(X[:, :2])
        if cfg.cbf:
            g = cl[:, 1:] - (1.0 - cfg.gamma) * cl[:, :-1]
        else:
            g = cl[:, 1:]
        s = np.maximum(0.0, (lam if lam is not None else 0.0) - rho * g)
        if s.any():
            lam_sq = float(np.sum(lam**2)) if lam is not None else 0.0
            cost += (float(np.sum(s**2)) - lam_sq) / (2.0 * rho)
            d[1:, :2] -= np.einsum("jk,jkd->kd", s, grad[:, 1:])
            if cfg.cbf:
                d[1:-1, :2] += ((1.0 - cfg.gamma)
                                * np.einsum("jk,jkd->kd", s[:, 1:],
                                            grad[:, 1:-1]))

    # Reverse sweep: lambda_k = d_k + A_k^T lambda_{k+1}.
    thetas = X[:-1, 2]
    lam = np.zeros((N + 1, 3))
    lam[1:, 0] = np.cumsum(d[:0:-1, 0])[::-1]
    lam[1:, 1] = np.cumsum(d[:0:-1, 1])[::-1]
    # Heading adjoint couples into position through the rotation Jacobian.
    cross = np.zeros(N + 1)
    cross[1:N] = T * U[1:, 0] * (-np.sin(thetas[1:]) * lam[2:, 0]
                                 + np.cos(thetas[1:]) * lam[2:, 1])
    lam[1:, 2] = np.cumsum((d[:0:-1, 2] + cross[:0:-1]))[::-1]

    grad_u = np.empty((N, 2))
    grad_u[:, 0] = 2.0 * qu[0] * U[:, 0] + T * (np.cos(thetas) * lam[1:, 0]
                                                + np.sin(thetas) * lam[1:, 1])
    grad_u[:, 1] = 2.0 * qu[1] * U[:, 1] + T * lam[1:, 2]
    return cost, grad_u.ravel()


def objective_value_and_gradient(problem: PlanProblem, cfg: PlannerConfig,
                                 U: np.ndarray):
    """Unpenalized tracking + input cost and its analytic control gradient
    (the quantity checked against finite differences)."""
    refs = _reference_array(problem, cfg)
    x0 = problem.robot.pose.as_array()
    cost, grad = _penalty_objective(np.asarray(U, dtype=float).ravel(),
                                    x0, refs, None, cfg, lam=None, rho=0.0)
    return cost, grad.reshape(cfg.N, 2)


def penalized_value_and_gradient(problem: PlanProblem, cfg: PlannerConfig,
                                 U: np.ndarray, rho: float,
                                 lam: np.ndarray | None = None):
    """Penalized cost and gradient, exposed for the finite-difference suite."""
    refs = _reference_array(problem, cfg)
    x0 = problem.robot.pose.as_array()
    stack = (_ObstacleStack(problem.obstacles, cfg, problem.robot_extent)
             if problem.obstacles else None)
    if stack is not None and lam is None:
        lam = np.zeros((len(problem.obstacles), cfg.N))
    cost, grad = _penalty_objective(np.asarray(U, dtype=float).ravel(),
                                    x0, refs, stack, cfg, lam=lam, rho=rho)
    return cost, grad.reshape(cfg.N, 2)


def _reference_array(problem: PlanProblem, cfg: PlannerConfig) -> np.ndarray:
    refs = problem.global_refs
    if len(refs) != cfg.N:
        raise ValueError(f"need exactly {cfg.N} reference poses")
    if cfg.shared and problem.user_refs is not None and problem.eta > 0.0:
        refs = blend_reference(refs, problem.user_refs, problem.eta)
    return np.array([[r.x, r.y, r.theta] for r in refs])


def _constraint_values(x0: np.ndarray, U: np.ndarray, stack: _ObstacleStack,
                       cfg: PlannerConfig) -> np.ndarray:
    """g[j, k] >= 0 is the variant's safety constraint, re-evaluated by an
    independent rollout of the controls."""
    X = _rollout(x0, U, cfg.T)
    cl, _ = stack.clearances(X[:, :2], need_grad=False)
    return cl[:, 1:] - (1.0 - cfg.gamma) * cl[:, :-1] if cfg.cbf else cl[:, 1:]


def max_violation(problem: PlanProblem, cfg: PlannerConfig, U: np.ndarray) -> float:
    """Largest safety-constraint violation of a control sequence."""
    if not problem.obstacles:
        return 0.0
    x0 = problem.robot.pose.as_array()
    stack = _ObstacleStack(problem.obstacles, cfg, problem.robot_extent)
    g = _constraint_values(x0, np.asarray(U, dtype=float).reshape(cfg.N, 2),
                           stack, cfg)
    return float(np.maximum(0.0, -g).max(initial=0.0))


_RHO_INITIAL = 2e3
_RHO_GROWTH = 10.0
_RHO_MAX = 1e7      # beyond this conditioning degrades without payoff
_RHO_WARM_CAP = 1e5  # fresh solves re-escalate instead of starting saturated


def solve(problem: PlanProblem, cfg: PlannerConfig,
          warm_start: np.ndarray | None = None,
          mu_init: float | None = None,
          lam_init: np.ndarray | None = None) -> PlanSolution:
    """Minimize the horizon cost subject to dynamics, input bounds, and the
    variant's safety constraints.

    Outer rounds update the constraint multipliers (augmented Lagrangian)
    and stiffen the penalty only when violations stall; each round runs a
    bounded quasi-Newton minimization with analytic gradients. A caller in
    a receding-horizon loop should pass the previous tick's shifted controls
    and penalty weight so most ticks finish in a round or two. status is
    'infeasible' when the iteration budget ends with violations above
    tolerance.
    """
    N = cfg.N
    refs = _reference_array(problem, cfg)
    x0 = problem.robot.pose.as_array()
    for obs in problem.obstacles:
        if obs.positions.shape != (N + 1, 2):
            raise ValueError("obstacle predictions must cover steps 0..N")
    stack = (_ObstacleStack(problem.obstacles, cfg, problem.robot_extent)
             if problem.obstacles else None)

    if warm_start is not None and warm_start.shape == (N, 2):
        U = warm_start.copy()
    else:
        U = np.zeros((N, 2))
    bounds = [(cfg.v_bounds[0], cfg.v_bounds[1]),
              (cfg.omega_bounds[0], cfg.omega_bounds[1])] * N
    U[:, 0] = np.clip(U[:, 0], *cfg.v_bounds)
    U[:, 1] = np.clip(U[:, 1], *cfg.omega_bounds)

    rho = 0.0
    lam = None
    if stack is not None:
        rho = min(max(_RHO_INITIAL, mu_init or 0.0), _RHO_WARM_CAP)
        if lam_init is not None and lam_init.shape == (len(problem.obstacles), N):
            lam = np.maximum(0.0, lam_init.copy())
        else:
            lam = np.zeros((len(problem.obstacles), N))
    iters_left = cfg.max_iterations
    total_iters = 0
    violation = 0.0
    prev_violation = math.inf
    rounds = 0
    while True:
        res = minimize(_penalty_objective, U.ravel(), jac=True,
                       args=(x0, refs, stack, cfg, lam, rho),
                       method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max(min(iters_left, 40), 1),
                                "ftol": 1e-9, "gtol": 1e-7})
        U = res.x.reshape(N, 2)
        total_iters += res.nit
        iters_left = cfg.max_iterations - total_iters
        rounds += 1
        if stack is None:
            break
        g = _constraint_values(x0, U, stack, cfg)
        violation = float(np.maximum(0.0, -g).max(initial=0.0))
        if violation <= cfg.tolerance or iters_left <= 0:
            break
        if res.nit == 0 and rho >= _RHO_MAX:
            break  # saturated penalty and no progress: genuinely stuck
        if (rounds >= 3 and violation > 50.0 * cfg.tolerance
                and violation > 0.8 * prev_violation):
            break  # far from feasible and stalled: stop burning the budget
        lam = np.maximum(0.0, lam - rho * g)
        if violation > 0.25 * prev_violation:
            rho = min(rho * _RHO_GROWTH, _RHO_MAX)  # stiffen unless converging fast
        prev_violation = violation

    X = _rollout(x0, U, cfg.T)
    cost, _ = _penalty_objective(U.ravel(), x0, refs, None, cfg, lam=None,
                                 rho=0.0)
    if stack is not None:
        lam = np.maximum(0.0, lam - rho * _constraint_values(x0, U, stack, cfg))
    if violation <= cfg.tolerance:
        status = "optimal" if iters_left > 0 else "max_iter"
    else:
        status = "infeasible"
    return PlanSolution(controls=U, predicted_states=X, cost=cost,
                        max_constraint_violation=violation, status=status,
                        iterations=total_iters, penalty_mu=rho,
                        multipliers=lam)


class LocalPlanner:
    """Per-robot receding-horizon planner state: the user-command window for
    the authority weight, the latest user command, and the warm start."""

    def __init__(self, cfg: PlannerConfig):
        self.cfg = cfg
        self._cmd_times: deque[float] = deque()
        self._last_user_cmd: tuple[float, float] | None = None
        self._warm: np.ndarray | None = None
        self._mu: float | None = None
        self._lam: np.ndarray | None = None
        self._last_cmd = (0.0, 0.0)

    def clamp(self, u) -> tuple[float, float]:
        return (float(np.clip(u[0], *self.cfg.v_bounds)),
                float(np.clip(u[1], *self.cfg.omega_bounds)))

    def note_user_command(self, t: float, u) -> None:
        """Register one user command: counted toward the authority window
        and, clamped, kept as the rollout command."""
        self._cmd_times.append(t)
        self._last_user_cmd = self.clamp(u)

    def eta(self, t: float) -> float:
        while self._cmd_times and self._cmd_times[0] <= t - self.cfg.eta_window:
            self._cmd_times.popleft()
        return user_weight(len(self._cmd_times), self.cfg.eta_lambda)

    def build_problem(self, t: float, robot: RobotState, global_refs,
                      tracked_areas) -> PlanProblem:
        """Assemble the horizon problem from the tracker output; pedestrian
        predictions extrapolate at constant estimated velocity when the
        variant uses prediction, else stay frozen."""
        cfg = self.cfg
        obstacles = []
        steps = np.arange(cfg.N + 1)[:, None] * cfg.T
        for track, area in tracked_areas:
            if cfg.prediction:
                positions = track.position[None, :] + steps * track.velocity[None, :]
            else:
                positions = np.tile(track.position, (cfg.N + 1, 1))
            obstacles.append(ObstaclePrediction(positions=positions, area=area,
                                                body_radius=track.body_radius))
        eta = self.eta(t) if cfg.shared else 0.0
        user_refs = None
        if cfg.shared and self._last_user_cmd is not None and eta > 0.0:
            user_refs = rollout_user_commands(robot, self._last_user_cmd,
                                              cfg.N, cfg.T)
        return PlanProblem(robot=robot, global_refs=list(global_refs),
                           user_refs=user_refs, eta=eta,
                           obstacles=tuple(obstacles),
                           robot_extent=cfg.robot_extent)

    def plan_step(self, t: float, robot: RobotState, global_refs,
                  tracked_areas) -> tuple[tuple[float, float], dict]:
        """One receding-horizon step: solve and apply the first control, or
        brake toward zero when the problem is infeasible."""
        problem = self.build_problem(t, robot, global_refs, tracked_areas)
        sol = solve(problem, self.cfg, warm_start=self._warm, mu_init=self._mu,
                    lam_init=self._lam)
        self._mu = sol.penalty_mu if sol.status != "infeasible" else None
        # The last iterate stays as next tick's warm start either way; after a
        # braking tick it is still the best available initializer. Multipliers
        # shift with the horizon like the controls do.
        self._warm = np.vstack([sol.controls[1:], sol.controls[-1:]])
        if sol.multipliers is not None:
            self._lam = np.hstack([sol.multipliers[:, 1:],
                                   sol.multipliers[:, -1:]])
        else:
            self._lam = None
        if sol.status == "infeasible":
            v_prev = self._last_cmd[0]
            decel = self.cfg.brake_decel * self.cfg.T
            v = math.copysign(max(0.0, abs(v_prev) - decel), v_prev)
            u = (v, 0.0)
        else:
            u = (float(sol.controls[0, 0]), float(sol.controls[0, 1]))
        self._last_cmd = u
        h_min = min((barrier_value((robot.pose.x, robot.pose.y),
                                   self.cfg.robot_extent, tr.position, area)
                     for tr, area in tracked_areas), default=math.inf)
        diag = {"status": sol.status, "iterations": sol.iterations,
                "violation": sol.max_constraint_violation,
                "eta": problem.eta, "h_min": h_min, "cost": sol.cost}
        return u, diag
