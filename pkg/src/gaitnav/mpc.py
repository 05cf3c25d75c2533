"""SE(2) navigation planner: goal-cost MPC with barrier obstacle constraints.

The model is a single integrator with heading under explicit Euler; the
nonlinear program is solved by SQP (scipy's SLSQP) over the input sequence
with states eliminated by single shooting and analytic gradients. Obstacle
avoidance uses discrete-time barrier constraints

    h(z_{k+1}) - (1 - alpha) h(z_k) - delta >= 0

softened by nonnegative slacks under a quadratic penalty so an infeasible
instance degrades gracefully instead of failing outright.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import minimize

from .errors import Infeasible
from .geometry import wrap_angle


@dataclass(frozen=True)
class NavState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta)):
            raise ValueError("non-finite navigation state")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class NavInput:
    v_par: float = 0.0
    v_perp: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.v_par, self.v_perp, self.omega])


@dataclass(frozen=True)
class EllipseObstacle:
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float = 0.0

    def __post_init__(self):
        if min(self.semi_axes) <= 0:
            raise ValueError("ellipse semi-axes must be positive")

    def shape_matrix(self) -> np.ndarray:
        a, b = self.semi_axes
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        R = np.array([[c, -s], [s, c]])
        return R @ np.diag([1.0 / a**2, 1.0 / b**2]) @ R.T


@dataclass(frozen=True)
class HalfplaneObstacle:
    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        if abs(math.hypot(*self.normal) - 1.0) > 1e-9:
            raise ValueError("halfplane normal must be unit length")


Obstacle = Union[EllipseObstacle, HalfplaneObstacle]


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 25
    dt: float = 0.4
    q_xy: float = 1.0
    q_theta: float = 0.5
    r_input: tuple[float, float, float] = (0.1, 0.2, 0.05)
    cbf_alpha: float = 0.3
    cbf_margin: float = 0.1
    v_par_bounds: tuple[float, float] = (-0.3, 0.8)
    v_perp_bounds: tuple[float, float] = (-0.2, 0.2)
    omega_bounds: tuple[float, float] = (-0.8, 0.8)
    tol: float = 1e-10
    max_iter: int = 200
    slack_penalty: float = 1e4
    slack_tolerance: float = 1e-3

    def __post_init__(self):
        if self.horizon < 1 or self.dt <= 0:
            raise ValueError("horizon must be >= 1 and dt positive")
        if not (0.0 < self.cbf_alpha < 1.0):
            raise ValueError("cbf_alpha must be in (0, 1)")
        if self.cbf_margin < 0:
            raise ValueError("cbf_margin must be nonnegative")
        if min(self.r_input) <= 0:
            raise ValueError("input weights must be positive")
        for lo, hi in (self.v_par_bounds, self.v_perp_bounds, self.omega_bounds):
            if lo >= hi:
                raise ValueError("input bounds must satisfy lo < hi")

    @property
    def input_lows(self) -> np.ndarray:
        return np.array(
            [self.v_par_bounds[0], self.v_perp_bounds[0], self.omega_bounds[0]]
        )

    @property
    def input_highs(self) -> np.ndarray:
        return np.array(
            [self.v_par_bounds[1], self.v_perp_bounds[1], self.omega_bounds[1]]
        )


@dataclass(frozen=True, eq=False)
class Plan:
    states: np.ndarray  # (N+1, 3)
    inputs: np.ndarray  # (N, 3)
    dt: float
    objective: float
    max_violation: float
    max_slack: float
    status: str


def nav_step(z: NavState, v: NavInput, dt: float) -> NavState:
    """Explicit-Euler step of the single integrator with heading."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    c, s = math.cos(z.theta), math.sin(z.theta)
    return NavState(
        x=z.x + dt * (v.v_par * c - v.v_perp * s),
        y=z.y + dt * (v.v_par * s + v.v_perp * c),
        theta=z.theta + dt * v.omega,
    )


def rollout(z0: np.ndarray, inputs: np.ndarray, dt: float) -> np.ndarray:
    """Array form of repeated nav_step, without heading wrap."""
    N = inputs.shape[0]
    Z = np.empty((N + 1, 3))
    Z[0] = z0
    for k in range(N):
        x, y, th = Z[k]
        vpar, vperp, om = inputs[k]
        c, s = math.cos(th), math.sin(th)
        Z[k + 1, 0] = x + dt * (vpar * c - vperp * s)
        Z[k + 1, 1] = y + dt * (vpar * s + vperp * c)
        Z[k + 1, 2] = th + dt * om
    return Z


def goal_cost(z, goal, q_xy: float, q_theta: float) -> float:
    """Quadratic distance plus a heading penalty built from sin/cos so that
    heading shifts of 2 pi cost nothing."""
    z = np.asarray(z, dtype=float)
    g = np.asarray(goal, dtype=float)
    d = z[2] - g[2]
    return float(
        q_xy * ((z[0] - g[0]) ** 2 + (z[1] - g[1]) ** 2)
        + q_theta * (math.sin(d) ** 2 + (1.0 - math.cos(d)) ** 2)
    )


def _goal_cost_grad(z, goal, q_xy, q_theta) -> np.ndarray:
    d = z[2] - goal[2]
    return np.array(
        [
            2.0 * q_xy * (z[0] - goal[0]),
            2.0 * q_xy * (z[1] - goal[1]),
            2.0 * q_theta * math.sin(d),
        ]
    )


def obstacle_h(obs: Obstacle, z) -> float:
    """Signed clearance: positive outside, zero on the boundary."""
    z = np.asarray(z, dtype=float)
    if isinstance(obs, HalfplaneObstacle):
        return float(obs.normal[0] * z[0] + obs.normal[1] * z[1] - obs.offset)
    d = z[:2] - np.asarray(obs.center)
    qf = float(d @ obs.shape_matrix() @ d)
    return math.sqrt(qf) - 1.0


def _obstacle_h_grad(obs: Obstacle, z) -> np.ndarray:
    if isinstance(obs, HalfplaneObstacle):
        return np.array([obs.normal[0], obs.normal[1], 0.0])
    d = np.asarray(z, dtype=float)[:2] - np.asarray(obs.center)
    E = obs.shape_matrix()
    qf = float(d @ E @ d)
    if qf < 1e-16:
        return np.zeros(3)
    g = E @ d / math.sqrt(qf)
    return np.array([g[0], g[1], 0.0])


def dcbf_constraint(h_k: float, h_k1: float, alpha: float, delta: float) -> float:
    """Barrier residual; feasibility requires a nonnegative value."""
    return h_k1 - (1.0 - alpha) * h_k - delta


def plan_objective(states, inputs, goal, cfg: MpcConfig) -> float:
    """Stage costs plus terminal cost of a candidate plan (no slack terms)."""
    R = np.asarray(cfg.r_input)
    J = goal_cost(states[-1], goal, cfg.q_xy, cfg.q_theta)
    for k in range(inputs.shape[0]):
        J += goal_cost(states[k], goal, cfg.q_xy, cfg.q_theta)
        J += float(inputs[k] @ (R * inputs[k]))
    return J


class _OcpWorkspace:
    """Shared rollout/sensitivity evaluation for objective and constraints."""

    def __init__(self, z0, goal, obstacles, cfg: MpcConfig):
        self.z0 = np.asarray(z0, dtype=float)
        self.goal = np.asarray(goal, dtype=float)
        self.obstacles = list(obstacles)
        self.cfg = cfg
        self.N = cfg.horizon
        self.nv = 3 * self.N
        self.ns = self.N * len(self.obstacles)
        self._key = None

    def _evaluate(self, x: np.ndarray):
        key = x.tobytes()
        if key == self._key:
            return
        self._key = key
        cfg, N = self.cfg, self.N
        V = x[: self.nv].reshape(N, 3)
        dt = cfg.dt
        Z = np.empty((N + 1, 3))
        Z[0] = self.z0
        S = np.zeros((N + 1, 3, self.nv))
        for k in range(N):
            xk, yk, th = Z[k]
            vpar, vperp, om = V[k]
            c, s = math.cos(th), math.sin(th)
            Z[k + 1] = (
                xk + dt * (vpar * c - vperp * s),
                yk + dt * (vpar * s + vperp * c),
                th + dt * om,
            )
            A = np.array(
                [
                    [1.0, 0.0, dt * (-vpar * s - vperp * c)],
                    [0.0, 1.0, dt * (vpar * c - vperp * s)],
                    [0.0, 0.0, 1.0],
                ]
            )
            S[k + 1] = A @ S[k]
            B = dt * np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
            S[k + 1][:, 3 * k : 3 * k + 3] += B
        self.V = V
        self.Z = Z
        self.S = S
        if self.obstacles:
            H = np.empty((len(self.obstacles), N + 1))
            Hg = np.empty((len(self.obstacles), N + 1, 3))
            for i, obs in enumerate(self.obstacles):
                for k in range(N + 1):
                    H[i, k] = obstacle_h(obs, Z[k])
                    Hg[i, k] = _obstacle_h_grad(obs, Z[k])
            self.H = H
            self.Hg = Hg

    def objective(self, x: np.ndarray):
        self._evaluate(x)
        cfg, N = self.cfg, self.N
        R = np.asarray(cfg.r_input)
        J = 0.0
        grad_v = np.zeros(self.nv)
        for k in range(N + 1):
            J += goal_cost(self.Z[k], self.goal, cfg.q_xy, cfg.q_theta)
            grad_v += _goal_cost_grad(self.Z[k], self.goal, cfg.q_xy, cfg.q_theta) @ self.S[k]
        J += float(np.sum(self.V**2 * R))
        grad_v += (2.0 * R * self.V).ravel()
        # exact (linear) plus quadratic slack penalty: the linear term drives
        # slack to exactly zero whenever the barrier is satisfiable
        slacks = x[self.nv :]
        J += cfg.slack_penalty * float(slacks @ slacks + np.sum(slacks))
        grad = np.concatenate([grad_v, cfg.slack_penalty * (2.0 * slacks + 1.0)])
        return J, grad

    def constraints(self, x: np.ndarray) -> np.ndarray:
        self._evaluate(x)
        return self.barrier_residuals() + x[self.nv :]

    def constraints_jac(self, x: np.ndarray) -> np.ndarray:
        self._evaluate(x)
        cfg, N = self.cfg, self.N
        n_obs = len(self.obstacles)
        jac = np.zeros((n_obs * N, self.nv + self.ns))
        row = 0
        for i in range(n_obs):
            for k in range(N):
                jac[row, : self.nv] = self.Hg[i, k + 1] @ self.S[k + 1] - (
                    1.0 - cfg.cbf_alpha
                ) * self.Hg[i, k] @ self.S[k]
                jac[row, self.nv + row] = 1.0
                row += 1
        return jac

    def barrier_residuals(self) -> np.ndarray:
        cfg, N = self.cfg, self.N
        out = np.empty(len(self.obstacles) * N)
        row = 0
        for i in range(len(self.obstacles)):
            for k in range(N):
                out[row] = dcbf_constraint(
                    self.H[i, k], self.H[i, k + 1], cfg.cbf_alpha, cfg.cbf_margin
                )
                row += 1
        return out


def solve_mpc(
    z0: NavState,
    goal: NavState,
    obstacles,
    cfg: MpcConfig,
    warm_start: Plan | None = None,
    warm_shift: int = 0,
) -> Plan:
    """Solve the navigation program and return the planned trajectory.

    The returned plan always satisfies the dynamics exactly (states come
    from re-rolling the solved inputs) and the input box (clipped). Raises
    Infeasible when barrier slack beyond ``cfg.slack_tolerance`` remains.
    """
    ws = _OcpWorkspace(z0.as_array(), goal.as_array(), obstacles, cfg)
    N = cfg.horizon
    V0 = np.zeros((N, 3))
    if warm_start is not None:
        src = np.asarray(warm_start.inputs)
        n_keep = max(0, min(N, src.shape[0]) - warm_shift)
        if n_keep > 0:
            V0[:n_keep] = src[warm_shift : warm_shift + n_keep]
    elif obstacles:
        # deterministic lateral nudge off the symmetric saddle a dead-center
        # obstacle creates (body-frame, so rotation equivariance survives)
        V0[:, 1] = 0.01
    V0 = np.clip(V0, cfg.input_lows, cfg.input_highs)
    x0 = V0.ravel()
    if ws.ns:
        ws._evaluate(np.concatenate([x0, np.zeros(ws.ns)]))
        s0 = np.maximum(0.0, -ws.barrier_residuals())
        x0 = np.concatenate([x0, s0])

    bounds = [
        (cfg.input_lows[i % 3], cfg.input_highs[i % 3]) for i in range(ws.nv)
    ] + [(0.0, None)] * ws.ns
    constraints = []
    if ws.ns:
        constraints.append(
            {"type": "ineq", "fun": ws.constraints, "jac": ws.constraints_jac}
        )
    res = None
    with warnings.catch_warnings():
        warnings.filterwarnings(
            "ignore", message="Values in x were outside bounds", category=RuntimeWarning
        )
        for _ in range(3):  # restart polishing: SQP re-entry from the incumbent
            res = minimize(
                ws.objective,
                x0,
                jac=True,
                method="SLSQP",
                bounds=bounds,
                constraints=constraints,
                options={"maxiter": cfg.max_iter, "ftol": cfg.tol},
            )
            x0 = res.x
            if res.status == 0:
                break
    V = np.clip(res.x[: ws.nv].reshape(N, 3), cfg.input_lows, cfg.input_highs)
    slacks = res.x[ws.nv :]
    Z = rollout(z0.as_array(), V, cfg.dt)
    if ws.ns:
        ws._evaluate(np.concatenate([V.ravel(), slacks]))
        resid = ws.barrier_residuals()
        max_violation = float(max(0.0, -np.min(resid + slacks)))
        max_slack = float(np.max(slacks)) if len(slacks) else 0.0
    else:
        max_violation = 0.0
        max_slack = 0.0
    if res.status == 0:
        status = "converged"
    elif res.status == 9:
        status = "max_iterations"
    else:
        status = f"failed_{res.status}"
    if max_slack > cfg.slack_tolerance:
        raise Infeasible(
            f"barrier slack {max_slack:.4g} exceeds tolerance {cfg.slack_tolerance}"
        )
    return Plan(
        states=Z,
        inputs=V,
        dt=cfg.dt,
        objective=plan_objective(Z, V, goal.as_array(), cfg),
        max_violation=max_violation,
        max_slack=max_slack,
        status=status,
    )
