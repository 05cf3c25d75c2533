"""Heightfield terrain with convex foothold polygons and spatial queries.

A Terrain couples three views of the same ground: a regular heightfield
(bilinear queries), a list of convex polygons marking where a foot may
land, and a coarse grid index mapping plan-view cells to the polygons
reachable from them.

Generator conventions (the valid-foothold construction rules):
  * stairs and blocks polygons are inset from every physical edge by
    ``edge_margin`` so footholds keep away from steps and drop-offs;
  * heightfield nodes are laid half a cell away from any height
    discontinuity, so bilinear interpolation is exact on polygon surfaces;
  * plane orientation is stored as slope angles: ``pitch = atan(dz/dx)``,
    ``roll = atan(dz/dy)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import InvalidSpec, NoFoothold, OutOfBounds, TooFewSamples

DEFAULT_RESOLUTION = 0.05
DEFAULT_CELL_SIZE = 0.5
DEFAULT_MAX_RADIUS = 0.5
DEFAULT_EDGE_MARGIN = 0.03


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class FlatSpec:
    extent: float = 10.0


@dataclass(frozen=True)
class SlopeSpec:
    grade: float = 0.2
    extent: float = 10.0


@dataclass(frozen=True)
class StairsSpec:
    rise: float = 0.17
    run: float = 0.29
    count: int = 15
    width: float = 3.0
    approach: float = 2.0
    top: float = 2.0
    edge_margin: float = DEFAULT_EDGE_MARGIN


@dataclass(frozen=True)
class BlocksSpec:
    block_size: float = 0.45
    gap: float = 0.10
    jitter: float = 0.05
    seed: int = 0
    extent: float = 6.0
    edge_margin: float = DEFAULT_EDGE_MARGIN


TerrainSpec = Union[FlatSpec, SlopeSpec, StairsSpec, BlocksSpec]

_SPEC_TYPES = {
    "flat": FlatSpec,
    "slope": SlopeSpec,
    "stairs": StairsSpec,
    "blocks": BlocksSpec,
}


def spec_to_dict(spec: TerrainSpec) -> dict:
    name = next(k for k, v in _SPEC_TYPES.items() if isinstance(spec, v))
    d = {"type": name}
    for f in spec.__dataclass_fields__:
        d[f] = getattr(spec, f)
    return d


def spec_from_dict(d: dict) -> TerrainSpec:
    from .errors import ParseError

    d = dict(d)
    kind = d.pop("type", None)
    if kind not in _SPEC_TYPES:
        raise ParseError(f"unknown terrain type {kind!r}")
    cls = _SPEC_TYPES[kind]
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
        raise ParseError(f"unknown terrain keys for {kind}: {sorted(unknown)}")
    return cls(**d)


# ---------------------------------------------------------------------------
# core types

@dataclass(frozen=True, eq=False)
class Heightfield:
    """Regular grid of heights; z[i, j] sits at (x0 + i*res_x, y0 + j*res_y)."""

    x0: float
    y0: float
    res_x: float
    res_y: float
    z: np.ndarray

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        nx, ny = self.z.shape
        return (
            self.x0,
            self.x0 + (nx - 1) * self.res_x,
            self.y0,
            self.y0 + (ny - 1) * self.res_y,
        )


@dataclass(eq=False)
class FootholdPolygon:
    """Convex, coplanar, CCW-in-plan foothold region."""

    id: int
    vertices: np.ndarray  # (n, 3)
    plane_normal: np.ndarray  # unit, z > 0
    roll: float
    pitch: float
    verts2d: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        n = np.asarray(self.plane_normal, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 3:
            raise ValueError("polygon needs at least three 3D vertices")
        if abs(np.linalg.norm(n) - 1.0) > 1e-9 or n[2] <= 0:
            raise ValueError("plane normal must be unit with positive z")
        if np.max(np.abs((v - v[0]) @ n)) > 1e-9:
            raise ValueError("polygon vertices not coplanar")
        p2 = v[:, :2]
        e = np.roll(p2, -1, axis=0) - p2
        e_next = np.roll(e, -1, axis=0)
        cross = e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]
        if np.any(cross < -1e-12):
            raise ValueError("polygon must be convex and CCW in plan view")
        self.vertices = v
        self.plane_normal = n
        self.verts2d = np.ascontiguousarray(p2)

    def plane_z(self, x: float, y: float) -> float:
        v0 = self.vertices[0]
        n = self.plane_normal
        return v0[2] - (n[0] * (x - v0[0]) + n[1] * (y - v0[1])) / n[2]

    def contains_xy(self, x: float, y: float, tol: float = 1e-9) -> bool:
        p2 = self.verts2d
        e = np.roll(p2, -1, axis=0) - p2
        r = np.array([x, y]) - p2
        return bool(np.all(e[:, 0] * r[:, 1] - e[:, 1] * r[:, 0] >= -tol))

    @property
    def aabb(self) -> tuple[float, float, float, float]:
        return (
            float(self.verts2d[:, 0].min()),
            float(self.verts2d[:, 0].max()),
            float(self.verts2d[:, 1].min()),
            float(self.verts2d[:, 1].max()),
        )


@dataclass(frozen=True)
class FootholdTarget:
    """Result of projecting a desired footstep: a point on a polygon plus
    that polygon's plane orientation."""

    position: tuple[float, float, float]
    roll: float
    pitch: float
    polygon_id: int
    projection_distance: float


@dataclass(frozen=True, eq=False)
class FootholdIndex:
    """Plan-view grid; each cell lists the polygons reachable from anywhere
    inside it (within the projection radius). Conservatively built from
    polygon bounding boxes, so cells may list extra candidates but never
    miss one."""

    cell_size: float
    origin: tuple[float, float]
    cells: dict

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((x - self.origin[0]) / self.cell_size)),
            int(math.floor((y - self.origin[1]) / self.cell_size)),
        )


@dataclass(frozen=True, eq=False)
class Terrain:
    heightfield: Heightfield
    polygons: tuple
    index: FootholdIndex
    spec: TerrainSpec
    max_radius: float = DEFAULT_MAX_RADIUS
    resolution: float = DEFAULT_RESOLUTION  # requested target, pre-snapping

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.heightfield.bounds

    def in_bounds(self, x: float, y: float, margin: float = 0.0) -> bool:
        xmin, xmax, ymin, ymax = self.bounds
        return (xmin + margin <= x <= xmax - margin) and (
            ymin + margin <= y <= ymax - margin
        )


# ---------------------------------------------------------------------------
# height queries

def height_at(terrain: Terrain, x: float, y: float) -> float:
    """Bilinear heightfield lookup."""
    return float(heights_at(terrain, np.array([x]), np.array([y]))[0])


def heights_at(terrain: Terrain, xs, ys) -> np.ndarray:
    hf = terrain.heightfield
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = hf.z.shape
    fx = (xs - hf.x0) / hf.res_x
    fy = (ys - hf.y0) / hf.res_y
    tol = 1e-9
    if np.any(fx < -tol) or np.any(fx > nx - 1 + tol) or np.any(fy < -tol) or np.any(
        fy > ny - 1 + tol
    ):
        raise OutOfBounds(f"height query outside {hf.bounds}")
    i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
    j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
    ax = fx - i
    ay = fy - j
    z = hf.z
    return (
        z[i, j] * (1 - ax) * (1 - ay)
        + z[i + 1, j] * ax * (1 - ay)
        + z[i, j + 1] * (1 - ax) * ay
        + z[i + 1, j + 1] * ax * ay
    )


# ---------------------------------------------------------------------------
# generators

def generate_terrain(
    spec: TerrainSpec,
    resolution: float = DEFAULT_RESOLUTION,
    cell_size: float = DEFAULT_CELL_SIZE,
    max_radius: float = DEFAULT_MAX_RADIUS,
) -> Terrain:
    """Build the heightfield / polygon / index triple for a terrain spec."""
    if resolution <= 0 or cell_size <= 0 or max_radius <= 0:
        raise InvalidSpec("resolution, cell_size and max_radius must be positive")
    if isinstance(spec, FlatSpec):
        hf, polys = _gen_flat(spec, resolution)
    elif isinstance(spec, SlopeSpec):
        hf, polys = _gen_slope(spec, resolution)
    elif isinstance(spec, StairsSpec):
        hf, polys = _gen_stairs(spec, resolution)
    elif isinstance(spec, BlocksSpec):
        hf, polys = _gen_blocks(spec, resolution)
    else:
        raise InvalidSpec(f"unknown terrain spec {spec!r}")
    index = build_foothold_index(polys, cell_size, max_radius)
    return Terrain(
        heightfield=hf,
        polygons=tuple(polys),
        index=index,
        spec=spec,
        max_radius=max_radius,
        resolution=resolution,
    )


def _level_rect(pid: int, x0: float, x1: float, y0: float, y1: float, z: float):
    verts = np.array(
        [[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]], dtype=float
    )
    return FootholdPolygon(
        id=pid,
        vertices=verts,
        plane_normal=np.array([0.0, 0.0, 1.0]),
        roll=0.0,
        pitch=0.0,
    )


def _grid_axis(lo: float, hi: float, res: float) -> np.ndarray:
    n = int(math.ceil((hi - lo) / res - 1e-12)) + 1
    return lo + res * np.arange(n)


def _gen_flat(spec: FlatSpec, res: float):
    if spec.extent <= 0:
        raise InvalidSpec("flat extent must be positive")
    e = spec.extent / 2.0
    xs = _grid_axis(-e, e, res)
    ys = _grid_axis(-e, e, res)
    z = np.zeros((len(xs), len(ys)))
    hf = Heightfield(xs[0], ys[0], res, res, z)
    x1, y1 = xs[-1], ys[-1]
    return hf, [_level_rect(0, -e, min(e, x1), -e, min(e, y1), 0.0)]


def _gen_slope(spec: SlopeSpec, res: float):
    if spec.extent <= 0:
        raise InvalidSpec("slope extent must be positive")
    e = spec.extent / 2.0
    xs = _grid_axis(-e, e, res)
    ys = _grid_axis(-e, e, res)
    z = spec.grade * np.repeat(xs[:, None], len(ys), axis=1)
    hf = Heightfield(xs[0], ys[0], res, res, z)
    g = spec.grade
    x1, y1 = min(e, xs[-1]), min(e, ys[-1])
    corners = np.array(
        [
            [-e, -e, -g * e],
            [x1, -e, g * x1],
            [x1, y1, g * x1],
            [-e, y1, -g * e],
        ]
    )
    normal = np.array([-g, 0.0, 1.0]) / math.hypot(g, 1.0)
    poly = FootholdPolygon(
        id=0, vertices=corners, plane_normal=normal, roll=0.0, pitch=math.atan(g)
    )
    return hf, [poly]


def _snap_half_offset_axis(lo: float, hi: float, res: float) -> np.ndarray:
    """Grid nodes congruent to res/2 modulo res, covering [lo, hi].

    Keeps every node half a cell away from discontinuities that sit at
    integer multiples of res, so bilinear interpolation stays exact on the
    flat pieces between them.
    """
    first = (math.floor(lo / res - 0.5) + 0.5) * res
    n = int(math.ceil((hi - first) / res - 1e-12)) + 1
    return first + res * np.arange(n)


def _gen_stairs(spec: StairsSpec, res_target: float):
    if spec.rise <= 0 or spec.run <= 0 or spec.count < 1 or spec.width <= 0:
        raise InvalidSpec("stairs need positive rise/run/width and count >= 1")
    if spec.approach <= 0 or spec.top <= 0:
        raise InvalidSpec("stairs approach/top platforms must be positive")
    res = spec.run / max(1, round(spec.run / res_target))
    m = spec.edge_margin
    if m < res / 2:
        raise InvalidSpec(
            f"edge_margin {m} too small for heightfield resolution {res:.4f}"
        )
    x_top = spec.count * spec.run
    xs = _snap_half_offset_axis(-spec.approach, x_top + spec.top, res)
    ny = max(2, int(math.ceil(spec.width / res_target)) + 1)
    ys = np.linspace(-spec.width / 2, spec.width / 2, ny)

    def tread_height(x: np.ndarray) -> np.ndarray:
        k = np.clip(np.floor(x / spec.run) + 1, 0, spec.count)
        return k * spec.rise

    z = np.repeat(tread_height(xs)[:, None], ny, axis=1)
    hf = Heightfield(xs[0], ys[0], res, ys[1] - ys[0], z)

    y0, y1 = -spec.width / 2 + m, spec.width / 2 - m
    polys = [_level_rect(0, -spec.approach + m, -m, y0, y1, 0.0)]
    for k in range(1, spec.count + 1):
        polys.append(
            _level_rect(k, (k - 1) * spec.run + m, k * spec.run - m, y0, y1, k * spec.rise)
        )
    polys.append(
        _level_rect(
            spec.count + 1, x_top + m, x_top + spec.top - m, y0, y1, spec.count * spec.rise
        )
    )
    return hf, polys


def _gen_blocks(spec: BlocksSpec, res_target: float):
    if spec.block_size <= 0 or spec.gap < 0 or spec.extent <= 0 or spec.jitter < 0:
        raise InvalidSpec("blocks need positive block_size/extent, nonnegative gap/jitter")
    res = res_target
    bs = max(1, round(spec.block_size / res)) * res
    gap = max(1, round(spec.gap / res)) * res
    m = spec.edge_margin
    if m < res / 2:
        raise InvalidSpec(f"edge_margin {m} too small for resolution {res}")
    if bs <= 2 * m:
        raise InvalidSpec("block_size too small for the edge margin")
    pitch = bs + gap
    n = max(1, int(spec.extent // pitch))
    start = -round((n * pitch - gap) / (2 * res)) * res
    rng = np.random.default_rng(spec.seed)
    heights = spec.jitter * rng.uniform(-1.0, 1.0, size=(n, n))
    gap_z = -0.2 - spec.jitter

    lo = start - gap
    hi = start + n * pitch
    xs = _snap_half_offset_axis(lo, hi, res)
    ys = xs.copy()

    def block_of(c: np.ndarray):
        i = np.floor((c - start) / pitch).astype(int)
        inside = (i >= 0) & (i < n) & (c - start - i * pitch <= bs)
        return i, inside

    ix, in_x = block_of(xs)
    iy, in_y = block_of(ys)
    hx = np.where(in_x, np.clip(ix, 0, n - 1), 0)
    hy = np.where(in_y, np.clip(iy, 0, n - 1), 0)
    mask = in_x[:, None] & in_y[None, :]
    z = np.where(mask, heights[hx[:, None], hy[None, :]], gap_z)
    hf = Heightfield(xs[0], ys[0], res, res, z)

    polys = []
    for i in range(n):
        for j in range(n):
            x0 = start + i * pitch
            y0 = start + j * pitch
            polys.append(
                _level_rect(
                    i * n + j, x0 + m, x0 + bs - m, y0 + m, y0 + bs - m, heights[i, j]
                )
            )
    return hf, polys


# ---------------------------------------------------------------------------
# foothold index and projection

def build_foothold_index(
    polygons, cell_size: float, max_radius: float
) -> FootholdIndex:
    """Grid-bucket polygons by inflated bounding box overlap."""
    if cell_size <= 0 or max_radius <= 0:
        raise ValueError("cell_size and max_radius must be positive")
    if not polygons:
        return FootholdIndex(cell_size=cell_size, origin=(0.0, 0.0), cells={})
    xmin = min(p.aabb[0] for p in polygons) - max_radius
    ymin = min(p.aabb[2] for p in polygons) - max_radius
    origin = (
        math.floor(xmin / cell_size) * cell_size,
        math.floor(ymin / cell_size) * cell_size,
    )
    cells: dict = {}
    for poly in polygons:
        x0, x1, y0, y1 = poly.aabb
        i0 = int(math.floor((x0 - max_radius - origin[0]) / cell_size))
        i1 = int(math.floor((x1 + max_radius - origin[0]) / cell_size))
        j0 = int(math.floor((y0 - max_radius - origin[1]) / cell_size))
        j1 = int(math.floor((y1 + max_radius - origin[1]) / cell_size))
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                cells.setdefault((i, j), []).append(poly.id)
    cells = {k: np.array(sorted(v), dtype=np.int64) for k, v in cells.items()}
    return FootholdIndex(cell_size=cell_size, origin=origin, cells=cells)


def _candidate_ids(terrain: Terrain, x: float, y: float) -> np.ndarray:
    idx = terrain.index
    ci, cj = idx.cell_of(x, y)
    cand = idx.cells.get((ci, cj))
    if cand is not None and len(cand):
        return cand
    max_ring = int(math.ceil(terrain.max_radius / idx.cell_size)) + 1
    for r in range(1, max_ring + 1):
        found: list = []
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                if max(abs(di), abs(dj)) != r:
                    continue
                ids = idx.cells.get((ci + di, cj + dj))
                if ids is not None:
                    found.extend(ids.tolist())
        if found:
            return np.array(sorted(set(found)), dtype=np.int64)
    return np.empty(0, dtype=np.int64)


def project_footstep(terrain: Terrain, p) -> FootholdTarget:
    """Snap a plan-view point to the nearest foothold polygon.

    Candidates come from the point's index cell (expanding outward ring by
    ring when the cell is empty); ties break toward the lowest polygon id.
    """
    x, y = float(p[0]), float(p[1])
    cand = _candidate_ids(terrain, x, y)
    if len(cand) == 0:
        raise NoFoothold(f"no foothold candidates near ({x:.3f}, {y:.3f})")
    polys = [terrain.polygons[i] for i in cand]
    verts = np.concatenate([pl.verts2d for pl in polys])
    starts = np.zeros(len(polys) + 1, dtype=np.int64)
    starts[1:] = np.cumsum([len(pl.verts2d) for pl in polys])
    dist2, qx, qy = _kernels.project_point_polygons(x, y, verts, starts)
    best = int(np.argmin(dist2))  # candidates are id-sorted, argmin takes first
    d = math.sqrt(float(dist2[best]))
    if d > terrain.max_radius + 1e-12:
        raise NoFoothold(
            f"nearest foothold {d:.3f} m away exceeds radius {terrain.max_radius}"
        )
    poly = polys[best]
    px, py = float(qx[best]), float(qy[best])
    return FootholdTarget(
        position=(px, py, poly.plane_z(px, py)),
        roll=poly.roll,
        pitch=poly.pitch,
        polygon_id=poly.id,
        projection_distance=d,
    )


# ---------------------------------------------------------------------------
# corridor envelopes

@dataclass(frozen=True, eq=False)
class Envelope:
    """Piecewise-linear concave upper envelope over an increasing abscissa."""

    knots_s: np.ndarray
    knots_h: np.ndarray

    def __call__(self, s):
        return np.interp(s, self.knots_s, self.knots_h)


def upper_convex_hull(s, h) -> Envelope:
    """Upper convex hull of samples (s_i, h_i) by monotone chain."""
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    if len(s) < 2:
        raise TooFewSamples("need at least two samples for an envelope")
    if np.any(np.diff(s) <= 0):
        raise ValueError("abscissa must be strictly increasing")
    hull: list[tuple[float, float]] = []
    for sp, hp in zip(s, h):
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            if (ax - ox) * (hp - oy) - (ay - oy) * (sp - ox) >= 0.0:
                hull.pop()
            else:
                break
        hull.append((sp, hp))
    arr = np.array(hull)
    return Envelope(knots_s=arr[:, 0], knots_h=arr[:, 1])


@dataclass(frozen=True, eq=False)
class CorridorEnvelope:
    """Terrain envelope along a swing corridor, parameterized by phase."""

    phases: np.ndarray
    arc: np.ndarray
    heights: np.ndarray
    envelope: Envelope | None  # None for a degenerate (stationary) corridor
    constant: float = 0.0

    def __call__(self, t):
        if self.envelope is None:
            return self.constant if np.isscalar(t) else np.full(np.shape(t), self.constant)
        s = np.interp(t, self.phases, self.arc)
        out = self.envelope(s)
        return float(out) if np.isscalar(t) else out


def swing_corridor_hull(
    terrain: Terrain, xy_path: Callable, T: float, n_samples: int = 21
) -> CorridorEnvelope:
    """Scan terrain height along a swing path and hull it.

    Heights are sampled at ``n_samples`` uniform phases (endpoints included)
    and hulled over arc length; the result maps phase back through the
    path's own arc-length profile.
    """
    if n_samples < 2:
        raise TooFewSamples("n_samples must be at least 2")
    ts = np.linspace(0.0, T, n_samples)
    pts = np.array([xy_path(t) for t in ts], dtype=float)
    hs = heights_at(terrain, pts[:, 0], pts[:, 1])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] < 1e-9:
        return CorridorEnvelope(
            phases=ts, arc=arc, heights=hs, envelope=None, constant=float(hs.max())
        )
    # collapse duplicate abscissae (path momentarily stationary), keep max height
    keep_s = [arc[0]]
    keep_h = [hs[0]]
    for si, hi in zip(arc[1:], hs[1:]):
        if si - keep_s[-1] < 1e-12:
            keep_h[-1] = max(keep_h[-1], hi)
        else:
            keep_s.append(si)
            keep_h.append(hi)
    env = upper_convex_hull(keep_s, keep_h)
    return CorridorEnvelope(phases=ts, arc=arc, heights=hs, envelope=env)


# ---------------------------------------------------------------------------
# serialization

def save_terrain(terrain: Terrain, path, include_polygons: bool = False, meta: dict | None = None):
    doc = {
        "spec": spec_to_dict(terrain.spec),
        "resolution": terrain.resolution,
        "cell_size": terrain.index.cell_size,
        "max_radius": terrain.max_radius,
    }
    if include_polygons:
        doc["polygons"] = [
            {
                "id": p.id,
                "vertices": p.vertices.tolist(),
                "roll": p.roll,
                "pitch": p.pitch,
            }
            for p in terrain.polygons
        ]
    if meta:
        doc.update(meta)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)


def load_terrain(path) -> Terrain:
    from .errors import ParseError

    with open(path) as f:
        doc = json.load(f)
    if "spec" not in doc:
        raise ParseError("terrain file missing 'spec'")
    spec = spec_from_dict(doc["spec"])
    terrain = generate_terrain(
        spec,
        resolution=doc.get("resolution", DEFAULT_RESOLUTION),
        cell_size=doc.get("cell_size", DEFAULT_CELL_SIZE),
        max_radius=doc.get("max_radius", DEFAULT_MAX_RADIUS),
    )
    if "polygons" in doc:
        polys = []
        for pd in doc["polygons"]:
            verts = np.asarray(pd["vertices"], dtype=float)
            normal = _plane_normal(verts)
            polys.append(
                FootholdPolygon(
                    id=pd["id"],
                    vertices=verts,
                    plane_normal=normal,
                    roll=pd.get("roll", 0.0),
                    pitch=pd.get("pitch", 0.0),
                )
            )
        index = build_foothold_index(
            polys, terrain.index.cell_size, terrain.max_radius
        )
        terrain = Terrain(
            heightfield=terrain.heightfield,
            polygons=tuple(polys),
            index=index,
            spec=spec,
            max_radius=terrain.max_radius,
            resolution=terrain.resolution,
        )
    return terrain


def _plane_normal(verts: np.ndarray) -> np.ndarray:
    n = np.cross(verts[1] - verts[0], verts[2] - verts[0])
    n = n / np.linalg.norm(n)
    return n if n[2] > 0 else -n


def save_heightfield_csv(terrain: Terrain, path, meta: dict | None = None):
    hf = terrain.heightfield
    with open(path, "w") as f:
        f.write(f"# x0={hf.x0!r} y0={hf.y0!r} res_x={hf.res_x!r} res_y={hf.res_y!r}\n")
        for k, v in (meta or {}).items():
            f.write(f"# {k}={v}\n")
        for row in hf.z:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")
