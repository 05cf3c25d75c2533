"""Flat-ground whole-body reference for one step.

Builds the evaluable reference a tracking controller consumes: pelvis pose,
swing-foot pose, and shoulder angles as closed-form functions of the step
phase t in [0, T]. All poses are world-frame; the construction happens in
the stance frame (origin at the stance foot, rotated by its yaw) and is
composed out at the end.

The vertical channels here assume a level stance plane at z = 0; terrain
consistency is layered on by :mod:`gaitnav.modulation`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import OutOfPhase
from .geometry import Pose3, world_from_frame_xy
from .lip import (
    GaitFixedPoints,
    GaitParams,
    Se2Velocity,
    desired_step_lengths,
    gait_fixed_points,
    lip_flow,
)


@dataclass(frozen=True)
class StepContext:
    """Inputs fixing one step: where the feet are, which gait phase this is,
    and the active velocity command."""

    stance_pose: Pose3
    swing_start: Pose3
    stance_parity: int  # 1 or 2, alternates between consecutive steps
    cmd: Se2Velocity

    def __post_init__(self):
        if self.stance_parity not in (1, 2):
            raise ValueError("stance_parity must be 1 or 2")


@dataclass(frozen=True)
class StepReference:
    """Evaluable reference for one step.

    ``com``, ``swing`` map phase t in [0, T] to world poses; ``arms`` maps t
    to (left, right) shoulder angles. ``footstep_target`` is the world pose
    the swing foot reaches at t = T. ``nominal_step_xy`` keeps the
    unprojected stance-frame step for the terrain-modulation stage.
    """

    duration: float
    stance_pose: Pose3
    swing_start: Pose3
    stance_parity: int
    com: Callable[[float], Pose3]
    swing: Callable[[float], Pose3]
    arms: Callable[[float], tuple[float, float]]
    footstep_target: Pose3
    nominal_step_xy: tuple[float, float]
    modulated: bool = False


def _check_phase(t: float, T: float) -> None:
    if t < 0.0 or t > T:
        raise OutOfPhase(f"t={t} outside [0, {T}]")


def bezier_profile(t: float, T: float) -> tuple[float, float]:
    """Cubic blend with b(0)=0, b'(0)=0, b(T)=1, b'(T)=0.

    Returns (b, db/dt).
    """
    _check_phase(t, T)
    s = t / T
    b = s * s * (3.0 - 2.0 * s)
    b_dot = 6.0 * s * (1.0 - s) / T
    return b, b_dot


def swing_z_profile(t: float, T: float, apex: float) -> float:
    """Symmetric up-and-down bump: the same cubic blend run twice as fast,
    forward on the way up and mirrored on the way down."""
    _check_phase(t, T)
    if t < 0.5 * T:
        return apex * bezier_profile(2.0 * t, T)[0]
    return apex * bezier_profile(2.0 * (T - t), T)[0]


def com_z_profile(t: float, cmd: Se2Velocity, params: GaitParams) -> float:
    """Vertical pelvis reference: dips below com_height proportionally to
    the commanded forward speed, lowest at the middle of the step."""
    scale = params.com_z_amp * cmd.vx / params.v_max
    return params.com_height + scale * (
        math.sin(2.0 * math.pi * t / params.period + math.pi) - 1.0
    )


def swing_pose_nominal(
    t: float, ctx: StepContext, target_xy, params: GaitParams
) -> Pose3:
    """Swing-foot pose at phase t.

    x, y blend from the start to ``target_xy`` (stance frame); z follows the
    symmetric bump; yaw blends from the start yaw to the commanded heading
    advance over one step. Roll and pitch stay level.
    """
    T = params.period
    _check_phase(t, T)
    b, _ = bezier_profile(t, T)
    start_sf = _swing_start_stance_frame(ctx)
    x_sf = target_xy[0] * b + (1.0 - b) * start_sf[0]
    y_sf = target_xy[1] * b + (1.0 - b) * start_sf[1]
    yaw_sf = ctx.cmd.wz * T * b + (1.0 - b) * start_sf[2]
    xy_w = world_from_frame_xy(ctx.stance_pose, (x_sf, y_sf))
    return Pose3(
        x=xy_w[0],
        y=xy_w[1],
        z=swing_z_profile(t, T, params.swing_height),
        roll=0.0,
        pitch=0.0,
        yaw=ctx.stance_pose.yaw + yaw_sf,
    )


def _swing_start_stance_frame(ctx: StepContext) -> tuple[float, float, float]:
    from .geometry import frame_from_world_xy, wrap_angle

    xy = frame_from_world_xy(ctx.stance_pose, ctx.swing_start.xy)
    yaw = wrap_angle(ctx.swing_start.yaw - ctx.stance_pose.yaw)
    return xy[0], xy[1], yaw


def com_pose_nominal(
    t: float, fp: GaitFixedPoints, ctx: StepContext, params: GaitParams
) -> Pose3:
    """Pelvis pose at phase t: the in-step pendulum flow of the post-impact
    fixed points, yaw aligned with the stance foot at mid-stance."""
    T = params.period
    _check_phase(t, T)
    x_lat = fp.x_lat_1 if ctx.stance_parity == 1 else fp.x_lat_2
    sag = lip_flow(fp.x_sag, t, params.omega)
    lat = lip_flow(x_lat, t, params.omega)
    xy_w = world_from_frame_xy(ctx.stance_pose, (sag.p, lat.p))
    return Pose3(
        x=xy_w[0],
        y=xy_w[1],
        z=com_z_profile(t, ctx.cmd, params),
        roll=0.0,
        pitch=0.0,
        yaw=ctx.stance_pose.yaw + ctx.cmd.wz * (t - 0.5 * T),
    )


def arm_angles(
    t: float, cmd: Se2Velocity, params: GaitParams
) -> tuple[float, float]:
    """Anti-phase shoulder sinusoids scaled by the commanded forward speed."""
    amp = params.arm_amp * cmd.vx / params.v_max
    phase = 2.0 * math.pi * t / params.period
    return (
        amp * math.sin(phase + params.arm_phase_left),
        amp * math.sin(phase + params.arm_phase_right),
    )


def assemble_nominal_step(ctx: StepContext, params: GaitParams) -> StepReference:
    """Build the complete flat-ground reference for one step.

    The footstep target sits at the desired step lengths in the stance
    frame, level with the stance foot, with the commanded heading advance.
    """
    targets = desired_step_lengths(ctx.cmd, params)
    fp = gait_fixed_points(targets, params)
    u_y = targets.u_y1 if ctx.stance_parity == 1 else targets.u_y2
    step_xy = (targets.u_x, u_y)
    target_w = world_from_frame_xy(ctx.stance_pose, step_xy)
    footstep = Pose3(
        x=target_w[0],
        y=target_w[1],
        z=ctx.stance_pose.z,
        roll=0.0,
        pitch=0.0,
        yaw=ctx.stance_pose.yaw + ctx.cmd.wz * params.period,
    )
    return StepReference(
        duration=params.period,
        stance_pose=ctx.stance_pose,
        swing_start=ctx.swing_start,
        stance_parity=ctx.stance_parity,
        com=lambda t: com_pose_nominal(t, fp, ctx, params),
        swing=lambda t: swing_pose_nominal(t, ctx, step_xy, params),
        arms=lambda t: arm_angles(t, ctx.cmd, params),
        footstep_target=footstep,
        nominal_step_xy=step_xy,
        modulated=False,
    )
