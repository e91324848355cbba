"""Planar polygon primitives used by the contour representation.

All polygons are closed polylines stored as (m, 2) arrays of vertices in
counterclockwise order, with no repeated closing vertex.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GeometryError


def polygon_area(nodes: np.ndarray) -> float:
    """Signed shoelace area (positive for counterclockwise orientation)."""
    x = nodes[:, 0]
    y = nodes[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_moments(nodes: np.ndarray) -> tuple[float, float, float, float]:
    """Area, first moments and the radial second moment of a polygon.

    Returns ``(A, Mx, My, J)`` with ``A`` the signed area, ``Mx = integral
    of x dA``, ``My = integral of y dA`` and ``J = integral of (x^2 + y^2)
    dA``, all exact for the polygonal region.
    """
    x = nodes[:, 0]
    y = nodes[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    c = x * yn - xn * y
    area = 0.5 * float(np.sum(c))
    mx = float(np.sum((x + xn) * c)) / 6.0
    my = float(np.sum((y + yn) * c)) / 6.0
    j = float(np.sum((x * x + x * xn + xn * xn + y * y + y * yn + yn * yn) * c)) / 12.0
    return area, mx, my, j


def polygon_centroid(nodes: np.ndarray) -> np.ndarray:
    area, mx, my, _ = polygon_moments(nodes)
    return np.array([mx / area, my / area])


def is_simple_polygon(nodes: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect.

    Exactly touching or collinear overlapping edges count as
    non-simple.  The test is a vectorized all-pairs orientation check,
    O(m^2) but cheap at the node counts used here.
    """
    m = nodes.shape[0]
    if m < 3:
        return False
    a = nodes
    b = np.roll(nodes, -1, axis=0)

    def cross(ox, oy, px, py, qx, qy):
        return (px - ox) * (qy - oy) - (py - oy) * (qx - ox)

    ax, ay = a[:, 0], a[:, 1]
    bx, by = b[:, 0], b[:, 1]
    # d1[i, j]: orientation of edge i endpoints against segment j, and vice versa
    d1 = cross(ax[None, :], ay[None, :], bx[None, :], by[None, :], ax[:, None], ay[:, None])
    d2 = cross(ax[None, :], ay[None, :], bx[None, :], by[None, :], bx[:, None], by[:, None])
    d3 = cross(ax[:, None], ay[:, None], bx[:, None], by[:, None], ax[None, :], ay[None, :])
    d4 = cross(ax[:, None], ay[:, None], bx[:, None], by[:, None], bx[None, :], by[None, :])
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    # Touching configurations (an endpoint exactly on another edge's span).
    touch = ((d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0))

    idx = np.arange(m)
    adjacent = np.abs(idx[:, None] - idx[None, :]) <= 1
    adjacent |= np.abs(idx[:, None] - idx[None, :]) == m - 1
    bad = (proper | touch) & ~adjacent
    if not np.any(bad):
        return True
    # The coarse touch test fires for collinear but well-separated edges;
    # confirm touches with a bounding-box overlap before rejecting.
    ii, jj = np.nonzero(bad)
    for i, j in zip(ii, jj):
        if proper[i, j]:
            return False
        lo_i = np.minimum(a[i], b[i])
        hi_i = np.maximum(a[i], b[i])
        lo_j = np.minimum(a[j], b[j])
        hi_j = np.maximum(a[j], b[j])
        if np.all(lo_i <= hi_j) and np.all(lo_j <= hi_i):
            return False
    return True


def require_simple(nodes: np.ndarray, when: str = "") -> None:
    if not is_simple_polygon(nodes):
        suffix = f" ({when})" if when else ""
        raise GeometryError(f"contour is self-intersecting{suffix}")


def resample_closed_curve(nodes: np.ndarray, target_spacing: float) -> np.ndarray:
    """Resample a closed polyline to roughly uniform node spacing.

    Fits a periodic cubic spline through the nodes parameterized by
    cumulative chord length and evaluates it at equispaced parameter
    values.  The output node count is ``round(L / target_spacing)`` with a
    floor of 16, so a curve that is already uniform at the target spacing
    comes back unchanged to rounding.
    """
    closed = np.vstack([nodes, nodes[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    if np.any(seg == 0.0):
        raise GeometryError("contour has coincident adjacent nodes")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    length = s[-1]
    spline = CubicSpline(s, closed, axis=0, bc_type="periodic")
    n_out = max(16, int(round(length / target_spacing)))
    s_new = np.linspace(0.0, length, n_out, endpoint=False)
    return spline(s_new)


def rescale_to_area(nodes: np.ndarray, target_area: float) -> np.ndarray:
    """Scale a polygon about its centroid so its area matches exactly."""
    area = polygon_area(nodes)
    if area <= 0.0 or target_area <= 0.0:
        raise GeometryError("polygon area must stay positive during rescaling")
    factor = np.sqrt(target_area / area)
    centroid = polygon_centroid(nodes)
    return centroid + factor * (nodes - centroid)


def disk_polygon_intersection_area(nodes: np.ndarray, radius: float, center=(0.0, 0.0)) -> float:
    """Exact area of polygon intersected with a disk.

    Green's theorem edge decomposition: every edge contributes the signed
    area of the circular triangle (center, a, b) clipped to the disk.
    Sub-segments inside the disk contribute straight triangles, pieces
    outside contribute circular sectors.
    """
    if radius <= 0.0:
        return 0.0
    p = nodes - np.asarray(center, dtype=float)
    r2 = radius * radius
    total = 0.0
    m = p.shape[0]
    for i in range(m):
        a = p[i]
        b = p[(i + 1) % m]
        total += _edge_disk_contribution(a, b, radius, r2)
    return total


def _edge_disk_contribution(a: np.ndarray, b: np.ndarray, radius: float, r2: float) -> float:
    d = b - a
    # Split parameter values where |a + t d| = radius.
    ts = [0.0, 1.0]
    dd = float(d @ d)
    if dd > 0.0:
        ad = float(a @ d)
        aa = float(a @ a)
        disc = ad * ad - dd * (aa - r2)
        if disc > 0.0:
            sq = np.sqrt(disc)
            for t in ((-ad - sq) / dd, (-ad + sq) / dd):
                if 0.0 < t < 1.0:
                    ts.append(t)
    ts = sorted(ts)
    contrib = 0.0
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 <= 0.0:
            continue
        pm = a + 0.5 * (t0 + t1) * d
        p0 = a + t0 * d
        p1 = a + t1 * d
        # strict: a tangent sub-segment grazes the circle from outside
        if float(pm @ pm) < r2:
            contrib += 0.5 * (p0[0] * p1[1] - p0[1] * p1[0])
        else:
            ang = np.arctan2(p1[1], p1[0]) - np.arctan2(p0[1], p0[0])
            # A straight sub-segment subtends less than pi as seen from the center.
            if ang > np.pi:
                ang -= 2.0 * np.pi
            elif ang < -np.pi:
                ang += 2.0 * np.pi
            contrib += 0.5 * r2 * ang
    return contrib
