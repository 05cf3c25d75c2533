"""Terrain-consistent adjustment of a flat-ground step reference.

Four stages: snap the footstep onto a valid foothold, retarget the swing
beziers to it (orienting the foot to the landing plane), lift the swing
vertical profile by the corridor's upper envelope, and lift the pelvis
along the line joining the stance foot to the landing point. On flat
ground every stage is the identity.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .geometry import Pose3, frame_from_world_xy, world_from_frame_xy, wrap_angle
from .lip import GaitParams, Se2Velocity
from .reference import (
    StepContext,
    StepReference,
    assemble_nominal_step,
    bezier_profile,
    com_z_profile,
    swing_z_profile,
)
from .terrain import FootholdTarget, Terrain, project_footstep, swing_corridor_hull


def modulate_footstep(
    nominal_u, stance_pose: Pose3, terrain: Terrain
) -> FootholdTarget:
    """Project a stance-frame footstep onto the nearest valid foothold.

    The step is pushed through the stance frame into the world, projected,
    and returned with the landing plane's roll/pitch attached.
    """
    world_xy = world_from_frame_xy(stance_pose, nominal_u)
    return project_footstep(terrain, world_xy)


def modulate_swing(
    nominal: StepReference,
    target: FootholdTarget,
    terrain: Terrain,
    params: GaitParams,
    hull_samples: int = 21,
    clearance_margin: float = 0.0,
) -> Callable[[float], Pose3]:
    """Retarget the swing trajectory to a projected foothold.

    x, y and yaw reuse the nominal bezier blend with the new endpoint; roll
    and pitch blend from level to the landing plane's orientation; the
    vertical bump rides on the upper envelope of the terrain scanned along
    the (already retargeted) plan-view path.
    """
    stance = nominal.stance_pose
    T = nominal.duration
    start_xy = frame_from_world_xy(stance, nominal.swing_start.xy)
    start_yaw = wrap_angle(nominal.swing_start.yaw - stance.yaw)
    target_xy = frame_from_world_xy(stance, np.array(target.position[:2]))
    yaw_end = _command_yaw_advance(nominal) * T

    def xy_world(t: float) -> np.ndarray:
        b, _ = bezier_profile(t, T)
        sf = target_xy * b + (1.0 - b) * start_xy
        return world_from_frame_xy(stance, sf)

    corridor = swing_corridor_hull(terrain, xy_world, T, hull_samples)

    def swing(t: float) -> Pose3:
        b, _ = bezier_profile(t, T)
        xy = xy_world(t)
        return Pose3(
            x=xy[0],
            y=xy[1],
            z=swing_z_profile(t, T, params.swing_height)
            + corridor(t)
            + clearance_margin,
            roll=target.roll * b,
            pitch=target.pitch * b,
            yaw=stance.yaw + yaw_end * b + (1.0 - b) * start_yaw,
        )

    return swing


def _command_yaw_advance(nominal: StepReference) -> float:
    # footstep yaw was built as stance.yaw + wz * T; recover wz
    return wrap_angle(nominal.footstep_target.yaw - nominal.stance_pose.yaw) / nominal.duration


def modulate_com(
    nominal_z: Callable[[float], float], stance_z: float, target_z: float, T: float
) -> Callable[[float], float]:
    """Add the stance-to-landing line height to the pelvis vertical profile."""

    def com_z(t: float) -> float:
        return nominal_z(t) + stance_z + (target_z - stance_z) * (t / T)

    return com_z


def generate_step_reference(
    ctx: StepContext,
    terrain: Terrain,
    params: GaitParams,
    hull_samples: int = 21,
    clearance_margin: float = 0.0,
) -> StepReference:
    """Full terrain-consistent reference for one step.

    Runs the nominal construction, then the footstep / swing / pelvis
    modulation stages. Deterministic for a given terrain and context.
    """
    nominal = assemble_nominal_step(ctx, params)
    target = modulate_footstep(nominal.nominal_step_xy, ctx.stance_pose, terrain)
    swing = modulate_swing(
        nominal, target, terrain, params, hull_samples, clearance_margin
    )
    nominal_com = nominal.com
    com_z = modulate_com(
        lambda t: com_z_profile(t, ctx.cmd, params),
        ctx.stance_pose.z,
        target.position[2],
        params.period,
    )

    def com(t: float) -> Pose3:
        base = nominal_com(t)
        return Pose3(
            x=base.x, y=base.y, z=com_z(t), roll=0.0, pitch=0.0, yaw=base.yaw
        )

    footstep = Pose3(
        x=target.position[0],
        y=target.position[1],
        z=target.position[2],
        roll=target.roll,
        pitch=target.pitch,
        yaw=nominal.footstep_target.yaw,
    )
    return StepReference(
        duration=nominal.duration,
        stance_pose=ctx.stance_pose,
        swing_start=ctx.swing_start,
        stance_parity=ctx.stance_parity,
        com=com,
        swing=swing,
        arms=nominal.arms,
        footstep_target=footstep,
        nominal_step_xy=nominal.nominal_step_xy,
        modulated=True,
    )


def rollout_steps(
    terrain: Terrain,
    params: GaitParams,
    cmd: Se2Velocity,
    n_steps: int,
    start_stance: Pose3,
    start_swing: Pose3,
    start_parity: int = 1,
    modulate: bool = True,
) -> list[StepReference]:
    """Chain step references: each landing becomes the next stance foot.

    With ``modulate=False`` this is the terrain-blind baseline whose
    footsteps and swing profiles ignore the ground entirely.
    """
    refs: list[StepReference] = []
    stance, swing, parity = start_stance, start_swing, start_parity
    for _ in range(n_steps):
        ctx = StepContext(
            stance_pose=stance, swing_start=swing, stance_parity=parity, cmd=cmd
        )
        if modulate:
            ref = generate_step_reference(ctx, terrain, params)
        else:
            ref = assemble_nominal_step(ctx, params)
        refs.append(ref)
        stance, swing = ref.footstep_target, stance
        parity = 2 if parity == 1 else 1
    return refs
