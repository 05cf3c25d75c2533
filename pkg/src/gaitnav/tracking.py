"""Plan interpolation and the velocity feedback law.

The discrete plan becomes a continuous reference by linear interpolation
of states (heading on the shortest arc) and sample-and-hold of inputs.
The feedback law adds a proportional term on the world-frame tracking
error to the world-frame feedforward, rotates the linear part into the
robot frame, and clamps to the input box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlanExpired
from .geometry import rot2, wrap_angle
from .lip import Se2Velocity
from .mpc import NavInput, NavState, Plan


@dataclass(frozen=True)
class TrackerConfig:
    gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    rate: float = 10.0
    v_par_bounds: tuple[float, float] = (-0.3, 0.8)
    v_perp_bounds: tuple[float, float] = (-0.2, 0.2)
    omega_bounds: tuple[float, float] = (-0.8, 0.8)

    def __post_init__(self):
        if min(self.gains) < 0:
            raise ValueError("feedback gains must be nonnegative")
        if self.rate <= 0:
            raise ValueError("tracker rate must be positive")


def interpolate_plan(plan: Plan, t_since_plan: float) -> tuple[NavState, NavInput]:
    """Continuous reference at time t since the plan was made.

    Raises PlanExpired beyond the horizon; the caller must replan or hold
    zero velocity.
    """
    if t_since_plan < 0:
        raise ValueError("t_since_plan must be nonnegative")
    N = plan.inputs.shape[0]
    horizon = N * plan.dt
    if t_since_plan >= horizon:
        raise PlanExpired(f"t={t_since_plan:.3f} beyond horizon {horizon:.3f}")
    k = min(int(t_since_plan / plan.dt), N - 1)
    frac = t_since_plan / plan.dt - k
    za, zb = plan.states[k], plan.states[k + 1]
    theta = za[2] + frac * wrap_angle(zb[2] - za[2])
    z_ref = NavState(
        x=za[0] + frac * (zb[0] - za[0]),
        y=za[1] + frac * (zb[1] - za[1]),
        theta=theta,
    )
    return z_ref, NavInput(*plan.inputs[k])


def plan_feedforward_world(z_ref: NavState, v_ff: NavInput) -> NavInput:
    """Express the plan's body-frame feedforward in the world frame using
    the reference heading. Feed the result to velocity_feedback."""
    lin = rot2(z_ref.theta) @ np.array([v_ff.v_par, v_ff.v_perp])
    return NavInput(v_par=lin[0], v_perp=lin[1], omega=v_ff.omega)


def velocity_feedback(
    z_ref: NavState, v_ff: NavInput, z_meas: NavState, cfg: TrackerConfig
) -> Se2Velocity:
    """Feedforward plus proportional error feedback, rotated into the body.

    ``v_ff`` is interpreted as a world-frame velocity. The heading error is
    wrapped, so errors across the pi cut never command a full spin. Output
    is clamped componentwise to the input box.
    """
    kx, ky, kth = cfg.gains
    ex = z_ref.x - z_meas.x
    ey = z_ref.y - z_meas.y
    eth = wrap_angle(z_ref.theta - z_meas.theta)
    world = np.array([v_ff.v_par + kx * ex, v_ff.v_perp + ky * ey])
    body = rot2(-z_meas.theta) @ world
    wz = v_ff.omega + kth * eth
    return Se2Velocity(
        vx=float(np.clip(body[0], *cfg.v_par_bounds)),
        vy=float(np.clip(body[1], *cfg.v_perp_bounds)),
        wz=float(np.clip(wz, *cfg.omega_bounds)),
    )
