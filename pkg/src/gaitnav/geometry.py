"""Planar frames, 3D poses, and rotation helpers.

World frame is x-forward / y-left / z-up. Euler angles follow the ZYX
(yaw-pitch-roll) convention throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return math.pi - (math.pi - a) % TWO_PI


@dataclass(frozen=True)
class Pose3:
    """Position plus ZYX Euler orientation. Yaw is wrapped at construction."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.roll, self.pitch, self.yaw)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite pose component: {vals}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def rotation(self) -> np.ndarray:
        return rotation_zyx(self.roll, self.pitch, self.yaw)


def rot2(a: float) -> np.ndarray:
    """2x2 CCW rotation matrix."""
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def world_from_frame_xy(frame: Pose3, xy) -> np.ndarray:
    """Express a planar point given in `frame` coordinates in the world."""
    return frame.xy + rot2(frame.yaw) @ np.asarray(xy, dtype=float)


def frame_from_world_xy(frame: Pose3, xy_world) -> np.ndarray:
    """Express a planar world point in `frame` coordinates."""
    return rot2(-frame.yaw) @ (np.asarray(xy_world, dtype=float) - frame.xy)


def rotation_zyx(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def euler_zyx(R: np.ndarray) -> tuple[float, float, float]:
    """Recover (roll, pitch, yaw) from a rotation matrix. Inverse of rotation_zyx."""
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    if abs(R[2, 0]) > 1.0 - 1e-12:
        # gimbal lock: fold roll into yaw
        yaw = math.atan2(-R[0, 1], R[1, 1])
        roll = 0.0
    else:
        yaw = math.atan2(R[1, 0], R[0, 0])
        roll = math.atan2(R[2, 1], R[2, 2])
    return roll, pitch, yaw
