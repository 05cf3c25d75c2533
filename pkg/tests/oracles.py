"""Independent reference computations shared by the test suite.

Everything here deliberately avoids the library's own closed-form code
paths: brute-force geometry, classic integrators, and exhaustive scans.
"""
import numpy as np


def rk4_flow(state, t, omega, n_steps=2000):
    """Integrate xdot = [[0,1],[w^2,0]] x with classic RK4."""
    A = np.array([[0.0, 1.0], [omega**2, 0.0]])
    x = np.array(state, dtype=float)
    h = t / n_steps
    for _ in range(n_steps):
        k1 = A @ x
        k2 = A @ (x + 0.5 * h * k1)
        k3 = A @ (x + 0.5 * h * k2)
        k4 = A @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def brute_force_project(point, polygons):
    """Nearest plan-view point over every polygon, by dense edge/interior
    checks. Returns (distance, (qx, qy), polygon_id) or None."""
    best = None
    px, py = float(point[0]), float(point[1])
    for poly in polygons:
        verts = np.asarray(poly.verts2d, dtype=float)
        n = len(verts)
        inside = True
        cand = None
        best_d2 = np.inf
        for i in range(n):
            a = verts[i]
            b = verts[(i + 1) % n]
            e = b - a
            r = np.array([px, py]) - a
            if e[0] * r[1] - e[1] * r[0] < 0:
                inside = False
            ee = float(e @ e)
            s = 0.0 if ee == 0 else min(1.0, max(0.0, float(r @ e) / ee))
            c = a + s * e
            d2 = (px - c[0]) ** 2 + (py - c[1]) ** 2
            if d2 < best_d2:
                best_d2 = d2
                cand = c
        if inside:
            best_d2, cand = 0.0, np.array([px, py])
        d = np.sqrt(best_d2)
        if best is None or d < best[0] - 1e-15:
            best = (d, cand, poly.id)
    return best


def brute_force_upper_envelope(s, h, query):
    """Max over all chords between sample pairs (plus the samples
    themselves) at a query abscissa; the definition of the upper hull."""
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    best = -np.inf
    for i in range(len(s)):
        if abs(s[i] - query) < 1e-15:
            best = max(best, h[i])
        for j in range(i + 1, len(s)):
            if s[i] - 1e-15 <= query <= s[j] + 1e-15:
                w = (query - s[i]) / (s[j] - s[i])
                best = max(best, h[i] * (1 - w) + h[j] * w)
    return best


def ray_plane_zdepth(cam_origin, ray_dir_world, ray_dir_cam_z, plane_z=0.0):
    """Closed-form intersection with the horizontal plane z = plane_z,
    reported as depth along the optical axis."""
    if abs(ray_dir_world[2]) < 1e-15:
        return np.nan
    t = (plane_z - cam_origin[2]) / ray_dir_world[2]
    if t <= 0:
        return np.nan
    return t * ray_dir_cam_z
