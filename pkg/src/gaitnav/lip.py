"""Closed-form pendulum-over-stance-foot dynamics and gait fixed points.

The walker is reduced to a point mass at constant height vaulting over its
stance foot. Sagittal and lateral planes are decoupled copies of the same
1-D model; the sagittal gait closes after one step, the lateral after two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGait

GRAVITY = 9.81


@dataclass(frozen=True)
class GaitParams:
    """All gait constants. ``omega`` is derived from ``com_height`` when omitted.

    period          step period T, s
    com_height      nominal pendulum height z0, m
    omega           sqrt(g / z0), 1/s
    step_width      nominal lateral step width w, m
    swing_height    swing apex height above the stance plane, m
    com_z_amp       vertical pelvis oscillation amplitude at v_max, m
    arm_amp         shoulder swing amplitude at v_max, rad
    arm_phase_left  / arm_phase_right: sinusoid phase offsets, anti-phase
    v_max           reference maximum forward speed, m/s
    """

    period: float = 0.4
    com_height: float = 0.62
    step_width: float = 0.2
    swing_height: float = 0.12
    com_z_amp: float = 0.02
    arm_amp: float = 0.3
    arm_phase_left: float = math.pi
    arm_phase_right: float = 0.0
    v_max: float = 0.8
    omega: float | None = None

    def __post_init__(self):
        if self.period <= 0 or self.com_height <= 0:
            raise ValueError("period and com_height must be positive")
        if self.step_width <= 0 or self.v_max <= 0:
            raise ValueError("step_width and v_max must be positive")
        natural = math.sqrt(GRAVITY / self.com_height)
        if self.omega is None:
            object.__setattr__(self, "omega", natural)
        elif abs(self.omega - natural) > 1e-12:
            raise ValueError(
                f"omega={self.omega} inconsistent with sqrt(g/z0)={natural}"
            )
        phase_gap = (self.arm_phase_left - self.arm_phase_right) % (2 * math.pi)
        if abs(phase_gap - math.pi) > 1e-9:
            raise ValueError("arm phase offsets must differ by pi (anti-phase)")


@dataclass(frozen=True)
class LipState:
    """Pendulum state in one plane: position and velocity of the mass
    relative to the stance foot."""

    p: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.v)):
            raise ValueError("non-finite pendulum state")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.v])


@dataclass(frozen=True)
class Se2Velocity:
    """Planar velocity command: forward, lateral, yaw rate."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.wz)):
            raise ValueError("non-finite velocity command")


@dataclass(frozen=True)
class StepTargets:
    """Desired step lengths: one sagittal, two alternating lateral."""

    u_x: float
    u_y1: float
    u_y2: float


@dataclass(frozen=True)
class GaitFixedPoints:
    """Post-impact states closing the step-to-step map: period-1 sagittal,
    period-2 lateral pair."""

    x_sag: LipState
    x_lat_1: LipState
    x_lat_2: LipState


def flow_matrix(t: float, omega: float) -> np.ndarray:
    """State-transition matrix of the pendulum over time t."""
    ch = math.cosh(omega * t)
    sh = math.sinh(omega * t)
    return np.array([[ch, sh / omega], [omega * sh, ch]])


def lip_flow(x: LipState, t: float, omega: float) -> LipState:
    """Propagate the pendulum state forward by t seconds in closed form."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if omega <= 0:
        raise ValueError("omega must be positive")
    ch = math.cosh(omega * t)
    sh = math.sinh(omega * t)
    return LipState(ch * x.p + sh * x.v / omega, omega * sh * x.p + ch * x.v)


def step_to_step(x: LipState, u: float, params: GaitParams) -> LipState:
    """One full step: flow over the period, then reset the position by the
    step length u (the mass is re-expressed relative to the new stance foot)."""
    end = lip_flow(x, params.period, params.omega)
    return LipState(end.p - u, end.v)


def desired_step_lengths(cmd: Se2Velocity, params: GaitParams) -> StepTargets:
    """Map a planar velocity command to step lengths.

    u_x = vx*T; the two lateral steps straddle the nominal width:
    u_y1 = vy*T + w, u_y2 = vy*T - w.
    """
    return StepTargets(
        u_x=cmd.vx * params.period,
        u_y1=cmd.vy * params.period + params.step_width,
        u_y2=cmd.vy * params.period - params.step_width,
    )


def gait_fixed_points(targets: StepTargets, params: GaitParams) -> GaitFixedPoints:
    """Solve the steady-gait post-impact states.

    Sagittal: x = (I - Ad)^-1 Bd u_x.
    Lateral:  x1 = (I - Ad^2)^-1 (Ad Bd u_y1 + Bd u_y2), x2 = Ad x1 + Bd u_y1.
    """
    if params.omega * params.period <= 1e-9:
        raise DegenerateGait("omega * period too small, step map singular")
    A = flow_matrix(params.period, params.omega)
    B = np.array([-1.0, 0.0])
    I = np.eye(2)
    x_sag = np.linalg.solve(I - A, B * targets.u_x)
    x_lat_1 = np.linalg.solve(I - A @ A, A @ (B * targets.u_y1) + B * targets.u_y2)
    x_lat_2 = A @ x_lat_1 + B * targets.u_y1
    return GaitFixedPoints(
        x_sag=LipState(*x_sag),
        x_lat_1=LipState(*x_lat_1),
        x_lat_2=LipState(*x_lat_2),
    )
