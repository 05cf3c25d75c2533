"""Lyapunov-shaped tracking rewards over logged trajectories.

Each tracking objective carries a quadratic value function V = e' P e and
two bounded reward terms: one for small V, one for V decreasing at least
exponentially (V_dot + alpha V <= 0). Used here as trace diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyTrace


@dataclass(frozen=True, eq=False)
class TrackingObjective:
    name: str
    P: np.ndarray
    alpha: float = 2.0
    sigma1: float = 0.25
    sigma2: float = 0.25
    w1: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if P.shape[0] != P.shape[1] or np.max(np.abs(P - P.T)) > 1e-12:
            raise ValueError("P must be square and symmetric")
        if np.min(np.linalg.eigvalsh(P)) <= 0:
            raise ValueError("P must be positive definite")
        if min(self.alpha, self.sigma1, self.sigma2, self.w1, self.w2) <= 0:
            raise ValueError("alpha, sigmas and weights must be positive")
        object.__setattr__(self, "P", P)


@dataclass(frozen=True)
class RewardSample:
    t: float
    v: float
    v_dot: float
    r_v: float
    r_vdot: float
    r_total: float


def lyapunov_value(error, P) -> float:
    """Quadratic value e' P e."""
    e = np.asarray(error, dtype=float).ravel()
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape != (e.size, e.size):
        raise DimensionMismatch(f"error dim {e.size} vs P shape {P.shape}")
    return float(e @ P @ e)


def clf_reward_terms(
    v: float, v_dot: float, obj: TrackingObjective, t: float = 0.0
) -> RewardSample:
    """Two bounded terms: r_v = exp(-V/sigma1^2) rewards closeness,
    r_vdot = exp(-[V_dot + alpha V]_+ / sigma2^2) rewards decrease."""
    if v < 0:
        raise ValueError("V must be nonnegative")
    r_v = math.exp(-v / obj.sigma1**2)
    r_vdot = math.exp(-max(v_dot + obj.alpha * v, 0.0) / obj.sigma2**2)
    return RewardSample(
        t=t,
        v=v,
        v_dot=v_dot,
        r_v=r_v,
        r_vdot=r_vdot,
        r_total=obj.w1 * r_v + obj.w2 * r_vdot,
    )


@dataclass(frozen=True, eq=False)
class RewardTrace:
    samples: dict  # group name -> list[RewardSample]
    mean_error: dict  # group name -> mean position-error norm


def evaluate_trace(times, actual: dict, reference: dict, objectives: dict) -> RewardTrace:
    """Score aligned actual/reference channels against each objective.

    ``actual`` and ``reference`` map a group name (e.g. "com", "foot") to
    (N, d) arrays sampled at ``times``. V_dot uses a backward difference;
    the first sample takes V_dot = 0.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTrace("no samples to evaluate")
    out: dict = {}
    mean_err: dict = {}
    for name, obj in objectives.items():
        act = np.asarray(actual[name], dtype=float)
        ref = np.asarray(reference[name], dtype=float)
        if act.shape != ref.shape or act.shape[0] != times.size:
            raise DimensionMismatch(f"channel {name}: misaligned actual/reference")
        err = act - ref
        vs = np.einsum("ij,jk,ik->i", err, obj.P, err)
        samples = []
        for k, t in enumerate(times):
            if k == 0:
                v_dot = 0.0
            else:
                v_dot = (vs[k] - vs[k - 1]) / (times[k] - times[k - 1])
            samples.append(clf_reward_terms(float(vs[k]), float(v_dot), obj, t=float(t)))
        out[name] = samples
        mean_err[name] = float(np.mean(np.linalg.norm(err, axis=1)))
    return RewardTrace(samples=out, mean_error=mean_err)
