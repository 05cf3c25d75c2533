"""Hot numeric kernels, compiled with numba when available.

Each kernel has two implementations with identical array signatures: a
scalar loop compiled by ``numba.njit`` and a vectorized pure-numpy twin.
Setting the environment variable ``GAITNAV_NO_NUMBA=1`` (or failing to
import numba) selects the numpy path. ``benchmarks/bench_kernels.py``
compares the two.
"""
from __future__ import annotations

import os

import numpy as np

_EPS_DET = 1e-12
_EPS_T = 1e-9
_EPS_BARY = 1e-9  # watertightness pad so shared edges hit from either side

_flag = os.environ.get("GAITNAV_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by GAITNAV_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def _raycast_min_loop(origin, dirs, v0, e1, e2):
    n = dirs.shape[0]
    m = v0.shape[0]
    out = np.full(n, np.inf)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for i in range(n):
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        best = np.inf
        for j in range(m):
            e1x, e1y, e1z = e1[j, 0], e1[j, 1], e1[j, 2]
            e2x, e2y, e2z = e2[j, 0], e2[j, 1], e2[j, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if -_EPS_DET < det < _EPS_DET:
                continue
            inv = 1.0 / det
            tx = ox - v0[j, 0]
            ty = oy - v0[j, 1]
            tz = oz - v0[j, 2]
            u = (tx * px + ty * py + tz * pz) * inv
            if u < -_EPS_BARY or u > 1.0 + _EPS_BARY:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < -_EPS_BARY or u + v > 1.0 + _EPS_BARY:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if _EPS_T < t < best:
                best = t
        out[i] = best
    return out


def raycast_min_numpy(origin, dirs, v0, e1, e2):
    """Per-ray nearest intersection parameter against a triangle soup.

    Moller-Trumbore without backface culling; misses come back as inf.
    Vectorized across triangles, looped over rays to bound memory.
    """
    n = dirs.shape[0]
    out = np.full(n, np.inf)
    tvec = origin[None, :] - v0
    for i in range(n):
        d = dirs[i]
        pvec = np.cross(np.broadcast_to(d, e2.shape), e2)
        det = np.einsum("ij,ij->i", e1, pvec)
        ok = np.abs(det) >= _EPS_DET
        if not np.any(ok):
            continue
        inv = np.zeros_like(det)
        inv[ok] = 1.0 / det[ok]
        u = np.einsum("ij,ij->i", tvec, pvec) * inv
        ok &= (u >= -_EPS_BARY) & (u <= 1.0 + _EPS_BARY)
        qvec = np.cross(tvec, e1)
        v = qvec @ d * inv
        ok &= (v >= -_EPS_BARY) & (u + v <= 1.0 + _EPS_BARY)
        t = np.einsum("ij,ij->i", e2, qvec) * inv
        ok &= t > _EPS_T
        if np.any(ok):
            out[i] = t[ok].min()
    return out


def _project_point_polygons_loop(px, py, verts, starts):
    n_poly = starts.shape[0] - 1
    dist2 = np.empty(n_poly)
    qx_out = np.empty(n_poly)
    qy_out = np.empty(n_poly)
    for k in range(n_poly):
        lo = starts[k]
        hi = starts[k + 1]
        inside = True
        best = np.inf
        bx = 0.0
        by = 0.0
        for i in range(lo, hi):
            j = lo if i == hi - 1 else i + 1
            ax, ay = verts[i, 0], verts[i, 1]
            ex, ey = verts[j, 0] - ax, verts[j, 1] - ay
            rx, ry = px - ax, py - ay
            if ex * ry - ey * rx < 0.0:
                inside = False
            ee = ex * ex + ey * ey
            s = 0.0 if ee <= 0.0 else (rx * ex + ry * ey) / ee
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
            cx = ax + s * ex
            cy = ay + s * ey
            d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy)
            if d2 < best:
                best = d2
                bx = cx
                by = cy
        if inside:
            dist2[k] = 0.0
            qx_out[k] = px
            qy_out[k] = py
        else:
            dist2[k] = best
            qx_out[k] = bx
            qy_out[k] = by
    return dist2, qx_out, qy_out


def project_point_polygons_numpy(px, py, verts, starts):
    """Plan-view projection of a point onto each convex CCW polygon.

    ``verts`` is the concatenated (K, 2) vertex array, ``starts`` the
    per-polygon offsets (n_poly + 1). Returns squared distance and the
    closest point per polygon; a containing polygon reports distance 0.
    """
    n_poly = starts.shape[0] - 1
    dist2 = np.empty(n_poly)
    qx_out = np.empty(n_poly)
    qy_out = np.empty(n_poly)
    for k in range(n_poly):
        a = verts[starts[k] : starts[k + 1]]
        b = np.roll(a, -1, axis=0)
        e = b - a
        r = np.array([px, py]) - a
        cross = e[:, 0] * r[:, 1] - e[:, 1] * r[:, 0]
        ee = np.einsum("ij,ij->i", e, e)
        s = np.clip(np.divide(np.einsum("ij,ij->i", r, e), ee, where=ee > 0.0), 0.0, 1.0)
        s = np.where(ee > 0.0, s, 0.0)
        c = a + s[:, None] * e
        d2 = (px - c[:, 0]) ** 2 + (py - c[:, 1]) ** 2
        if np.all(cross >= 0.0):
            dist2[k] = 0.0
            qx_out[k] = px
            qy_out[k] = py
        else:
            i = int(np.argmin(d2))
            dist2[k] = d2[i]
            qx_out[k] = c[i, 0]
            qy_out[k] = c[i, 1]
    return dist2, qx_out, qy_out


if NUMBA_ENABLED:
    raycast_min_numba = njit(cache=True)(_raycast_min_loop)
    project_point_polygons_numba = njit(cache=True)(_project_point_polygons_loop)
    raycast_min = raycast_min_numba
    project_point_polygons = project_point_polygons_numba
else:
    raycast_min = raycast_min_numpy
    project_point_polygons = project_point_polygons_numpy
