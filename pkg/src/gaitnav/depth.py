"""Pinhole Z-depth camera over triangle meshes.

Rays are generated in the camera frame (x image-right, y image-down,
z optical) and cast against the terrain mesh plus any dynamic mesh
instances. Dynamic instances are handled by moving the ray into the mesh
local frame instead of moving the mesh: cast(T M, p, d) = cast(M, T^-1 p,
R^-1 d). Depth is reported along the optical axis, with NaN for misses,
and the noise model adds a random per-image bias plane plus uniform
per-pixel noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Pose3, euler_zyx
from .terrain import Terrain


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 15.0
    fy: float = 15.0
    cx: float = 15.0
    cy: float = 13.0
    width: int = 30
    height: int = 26
    max_range: float = 10.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")


@dataclass(frozen=True, eq=False)
class DepthImage:
    values: np.ndarray  # (height, width), NaN marks no return

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(eq=False)
class MeshInstance:
    """Indexed triangle soup in its local frame plus a rigid transform."""

    triangles: np.ndarray  # (M, 3, 3)
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        self.triangles = np.ascontiguousarray(self.triangles, dtype=float)
        R = np.asarray(self.rotation, dtype=float)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or np.linalg.det(R) < 0:
            raise ValueError("rotation must be orthonormal with det +1")
        self.rotation = R
        self.translation = np.asarray(self.translation, dtype=float)


@dataclass(frozen=True)
class DepthNoise:
    bias_amplitude: float = 0.03
    uniform_halfwidth: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.bias_amplitude < 0 or self.uniform_halfwidth < 0:
            raise ValueError("noise amplitudes must be nonnegative")


def pixel_rays(intr: CameraIntrinsics) -> np.ndarray:
    """Unit ray directions per pixel, row-major, camera frame."""
    us = (np.arange(intr.width) + 0.5 - intr.cx) / intr.fx
    vs = (np.arange(intr.height) + 0.5 - intr.cy) / intr.fy
    uu, vv = np.meshgrid(us, vs)
    dirs = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def raycast_instance(mesh: MeshInstance, origin, dirs) -> np.ndarray:
    """Ray parameters against a transformed mesh via the local-frame identity."""
    origin = np.asarray(origin, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    local_origin = mesh.rotation.T @ (origin - mesh.translation)
    local_dirs = np.ascontiguousarray(dirs @ mesh.rotation)
    tri = mesh.triangles
    v0 = np.ascontiguousarray(tri[:, 0])
    e1 = np.ascontiguousarray(tri[:, 1] - tri[:, 0])
    e2 = np.ascontiguousarray(tri[:, 2] - tri[:, 0])
    return _kernels.raycast_min(local_origin, local_dirs, v0, e1, e2)


def raycast_depth(
    terrain_mesh: MeshInstance,
    dynamic: list,
    cam_pose: Pose3,
    intr: CameraIntrinsics,
) -> DepthImage:
    """Cast the full pixel grid and report Z-depth (distance along the
    optical axis, not along the ray). Misses and returns beyond max_range
    come back NaN."""
    dirs_cam = pixel_rays(intr)
    R = cam_pose.rotation()
    origin = cam_pose.xyz
    dirs_world = dirs_cam @ R.T
    t_best = raycast_instance(terrain_mesh, origin, dirs_world)
    for mesh in dynamic:
        t_best = np.minimum(t_best, raycast_instance(mesh, origin, dirs_world))
    zdepth = t_best * dirs_cam[:, 2]
    zdepth[~np.isfinite(t_best)] = np.nan
    zdepth[zdepth > intr.max_range] = np.nan
    return DepthImage(values=zdepth.reshape(intr.height, intr.width))


def nan_aware_downsample(img: DepthImage, fy: int, fx: int) -> DepthImage:
    """Block-average ignoring NaNs; an all-NaN block stays NaN. Dimensions
    that do not divide evenly are padded with NaN."""
    if fy < 1 or fx < 1:
        raise ValueError("block factors must be >= 1")
    v = img.values
    h, w = v.shape
    ph = (-h) % fy
    pw = (-w) % fx
    if ph or pw:
        v = np.pad(v, ((0, ph), (0, pw)), constant_values=np.nan)
    blocks = v.reshape(v.shape[0] // fy, fy, v.shape[1] // fx, fx)
    finite = np.isfinite(blocks)
    counts = finite.sum(axis=(1, 3))
    sums = np.where(finite, blocks, 0.0).sum(axis=(1, 3))
    out = np.full(counts.shape, np.nan)
    np.divide(sums, counts, out=out, where=counts > 0)
    return DepthImage(values=out)


def apply_noise(img: DepthImage, noise: DepthNoise) -> DepthImage:
    """Add a per-image random bias plane plus per-pixel uniform noise.

    Deterministic for a fixed seed: the plane coefficients and then the
    pixel noise are drawn in fixed row-major order from one generator.
    """
    rng = np.random.default_rng(noise.seed)
    a, b, c = rng.uniform(-noise.bias_amplitude, noise.bias_amplitude, 3)
    h, w = img.values.shape
    uu = (np.arange(w) / w)[None, :]
    vv = (np.arange(h) / h)[:, None]
    plane = a + b * uu + c * vv
    jitter = rng.uniform(-noise.uniform_halfwidth, noise.uniform_halfwidth, (h, w))
    return DepthImage(values=img.values + plane + jitter)


# ---------------------------------------------------------------------------
# mesh construction

def heightfield_mesh(terrain: Terrain) -> MeshInstance:
    """Triangulate the heightfield grid, two triangles per cell."""
    hf = terrain.heightfield
    nx, ny = hf.z.shape
    xs = hf.x0 + hf.res_x * np.arange(nx)
    ys = hf.y0 + hf.res_y * np.arange(ny)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([xx, yy, hf.z], axis=2)  # (nx, ny, 3)
    a = verts[:-1, :-1]
    b = verts[1:, :-1]
    c = verts[1:, 1:]
    d = verts[:-1, 1:]
    t1 = np.stack([a, b, c], axis=2).reshape(-1, 3, 3)
    t2 = np.stack([a, c, d], axis=2).reshape(-1, 3, 3)
    tris = np.concatenate([t1, t2])
    return MeshInstance(
        triangles=tris, rotation=np.eye(3), translation=np.zeros(3)
    )


def box_mesh(size=(0.3, 0.3, 0.3)) -> MeshInstance:
    """Axis-aligned box centered at the local origin, 12 triangles."""
    sx, sy, sz = (s / 2 for s in size)
    corners = np.array(
        [
            [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
            [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
        ]
    )
    quads = [
        (0, 1, 2, 3), (4, 7, 6, 5), (0, 4, 5, 1),
        (1, 5, 6, 2), (2, 6, 7, 3), (3, 7, 4, 0),
    ]
    tris = []
    for q in quads:
        tris.append(corners[[q[0], q[1], q[2]]])
        tris.append(corners[[q[0], q[2], q[3]]])
    return MeshInstance(
        triangles=np.array(tris), rotation=np.eye(3), translation=np.zeros(3)
    )


def chest_camera_pose(
    x: float, y: float, heading: float, height: float = 1.0, pitch_down: float = math.radians(60)
) -> Pose3:
    """Torso-mounted camera pose: at the given height, yawed to the robot
    heading, optical axis tilted ``pitch_down`` below the horizon."""
    cb, sb = math.cos(pitch_down), math.sin(pitch_down)
    ch, sh = math.cos(heading), math.sin(heading)
    optical = np.array([cb * ch, cb * sh, -sb])
    right = np.array([sh, -ch, 0.0])
    down = np.cross(optical, right)
    R = np.column_stack([right, down, optical])
    roll, pitch, yaw = euler_zyx(R)
    return Pose3(x=x, y=y, z=height, roll=roll, pitch=pitch, yaw=yaw)


# ---------------------------------------------------------------------------
# image io

def write_pfm(path, img: DepthImage):
    """Portable float map, grayscale, little-endian, rows bottom-to-top."""
    v = np.flipud(img.values.astype("<f4"))
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{img.width} {img.height}\n".encode())
        f.write(b"-1.0\n")
        f.write(v.tobytes())


def read_pfm(path) -> DepthImage:
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError("not a grayscale PFM file")
        w, h = map(int, f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(f.read(), dtype="<f4" if scale < 0 else ">f4")
    return DepthImage(values=np.flipud(data.reshape(h, w)).astype(float))


def write_depth_csv(path, img: DepthImage, meta: dict | None = None):
    with open(path, "w") as f:
        for k, v in (meta or {}).items():
            f.write(f"# {k}={v}\n")
        for row in img.values:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")
