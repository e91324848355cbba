"""Riesz-potential kernel and induced-velocity evaluation.

The advecting velocity of the alpha-patch family is u = perp-grad G * theta
where G is the Green function of the fractional Laplacian
(-Delta)^(1 - alpha/2) on the plane, G(r) proportional to r^(-alpha).  This
module owns the kernel constants and the two velocity evaluators: direct
pairwise summation over regularized particles and boundary-integral
quadrature over patch contours.

Sign convention: the positive constant is used throughout, so a positive
patch rotates counterclockwise and the alpha -> 0 limit recovers the
standard Biot-Savart kernel 1/(2 pi) z_perp / |z|^2 of the 2-D Euler
equation.

Points are length-2 float arrays; point sets are (n, 2) arrays;
perp((a, b)) = (-b, a).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange


def gamma_fn(x: float) -> float:
    """Euler Gamma function on the positive real axis."""
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0.0:
        raise ValueError(f"gamma_fn requires a positive finite argument, got {x!r}")
    return math.gamma(x)


def riesz_constant(alpha: float) -> float:
    """Magnitude of the Green-function constant for exponent ``alpha``.

    Equals Gamma(alpha/2) / (pi 2^(2-alpha) Gamma((2-alpha)/2)), positive
    for alpha in (0, 2).
    """
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"riesz_constant requires alpha in (0, 2), got {alpha!r}")
    return gamma_fn(alpha / 2.0) / (math.pi * 2.0 ** (2.0 - alpha) * gamma_fn((2.0 - alpha) / 2.0))


@dataclass(frozen=True)
class KernelParams:
    """Kernel constants for a fixed interpolation exponent.

    ``riesz_constant`` scales the r^(-alpha) Green function and
    ``kernel_prefactor = alpha * riesz_constant`` scales the velocity
    kernel z_perp / |z|^(2+alpha).
    """

    alpha: float
    riesz_constant: float
    kernel_prefactor: float

    @classmethod
    def from_alpha(cls, alpha: float) -> "KernelParams":
        if not (0.0 < alpha <= 1.0):
            raise ValueError(f"alpha outside (0,1]: {alpha!r}")
        if alpha == 1.0:
            warnings.warn(
                "alpha = 1 is outside the validated range (0,1) and is experimental",
                stacklevel=2,
            )
        c = riesz_constant(alpha)
        return cls(alpha=float(alpha), riesz_constant=c, kernel_prefactor=alpha * c)


def perp(z: np.ndarray) -> np.ndarray:
    """Rotate vectors by +90 degrees: (a, b) -> (-b, a)."""
    z = np.asarray(z, dtype=float)
    return np.stack([-z[..., 1], z[..., 0]], axis=-1)


def kernel_eval(z, params: KernelParams) -> np.ndarray:
    """Velocity kernel K(z) = kernel_prefactor * z_perp / |z|^(2+alpha).

    Accepts a single point or an (..., 2) array; raises on any zero input
    vector, where the kernel is singular.
    """
    z = np.asarray(z, dtype=float)
    r2 = z[..., 0] ** 2 + z[..., 1] ** 2
    if np.any(r2 == 0.0):
        raise ValueError("kernel_eval is singular at z = 0; regularize or exclude")
    scale = params.kernel_prefactor * r2 ** (-(2.0 + params.alpha) / 2.0)
    return perp(z) * scale[..., None]


def kernel_eval_blob(z, eps: float, params: KernelParams) -> np.ndarray:
    """Mollified kernel kernel_prefactor * z_perp / (|z|^2 + eps^2)^((2+alpha)/2).

    Smooth everywhere (zero at z = 0) and within O((eps/|z|)^2) of
    ``kernel_eval`` for |z| much larger than eps.
    """
    if eps <= 0.0:
        raise ValueError(f"blob radius eps must be positive, got {eps!r}")
    z = np.asarray(z, dtype=float)
    r2 = z[..., 0] ** 2 + z[..., 1] ** 2 + eps * eps
    scale = params.kernel_prefactor * r2 ** (-(2.0 + params.alpha) / 2.0)
    return perp(z) * scale[..., None]


# ---------------------------------------------------------------------------
# Direct pairwise summation (the hot loop of the whole package)
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def _velocity_direct(targets, positions, weights, eps, alpha, prefactor, out):
    # Parallel over targets; strictly sequential source accumulation per
    # target, so results are bit-identical for any thread count.
    e2 = eps * eps
    expo = (2.0 + alpha) / 2.0
    n_src = positions.shape[0]
    for i in prange(targets.shape[0]):
        xi = targets[i, 0]
        yi = targets[i, 1]
        ux = 0.0
        uy = 0.0
        for j in range(n_src):
            dx = xi - positions[j, 0]
            dy = yi - positions[j, 1]
            s = weights[j] / (dx * dx + dy * dy + e2) ** expo
            ux -= dy * s
            uy += dx * s
        out[i, 0] = prefactor * ux
        out[i, 1] = prefactor * uy


def velocity_particles(targets, field, params: KernelParams) -> np.ndarray:
    """Blob-regularized velocity induced by a particle field.

    ``u(x) = sum_j w_j K_eps(x - x_j)`` with the mollified kernel; the
    self term of a particle evaluating at its own position is exactly
    zero by oddness.  Output rows follow target order.

    Parameters
    ----------
    targets : (n, 2) array or single point
    field : ParticleField
    params : KernelParams
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.ndim != 2 or targets.shape[1] != 2:
        raise ValueError("targets must be a point or an (n, 2) array")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    out = np.empty_like(targets)
    _velocity_direct(
        np.ascontiguousarray(targets),
        field.positions,
        field.weights,
        field.eps,
        params.alpha,
        params.kernel_prefactor,
        out,
    )
    return out


# ---------------------------------------------------------------------------
# Contour quadrature
# ---------------------------------------------------------------------------
#
# For a patch of constant value theta0 on a region Omega, the area integral
# u(x) = theta0 * integral_Omega K(x - y) dy reduces by the divergence
# theorem to the boundary line integral
#
#     u(x) = theta0 * riesz_constant * integral_{boundary} |x - y(s)|^(-alpha) dy(s)
#
# traversed counterclockwise.  Off the boundary the integrand is smooth and
# the composite trapezoid rule over the polyline applies; at a node the
# integrable singularity is handled by replacing the two adjacent segments
# with the exact straight-segment power-law integral
# |delta|^(-alpha) delta / (1 - alpha), and the next few segments on either
# side, where the integrand still varies steeply, with per-segment
# Gauss-Legendre quadrature.

_NEAR_SEGMENTS = 8
_GL_POINTS = 12
_GL_NODES_STD, _GL_WEIGHTS_STD = np.polynomial.legendre.leggauss(_GL_POINTS)
_GL_NODES = np.ascontiguousarray(0.5 * (_GL_NODES_STD + 1.0))
_GL_WEIGHTS = np.ascontiguousarray(0.5 * _GL_WEIGHTS_STD)

@njit(cache=True)
def _contour_velocity_points(points, nodes, alpha, coef, out):
    m = nodes.shape[0]
    half = -0.5 * alpha
    for i in range(points.shape[0]):
        px = points[i, 0]
        py = points[i, 1]
        f = np.empty(m)
        for j in range(m):
            dx = px - nodes[j, 0]
            dy = py - nodes[j, 1]
            f[j] = (dx * dx + dy * dy) ** half
        ux = 0.0
        uy = 0.0
        for j in range(m):
            k = j + 1 if j + 1 < m else 0
            w = 0.5 * (f[j] + f[k])
            ux += w * (nodes[k, 0] - nodes[j, 0])
            uy += w * (nodes[k, 1] - nodes[j, 1])
        out[i, 0] = coef * ux
        out[i, 1] = coef * uy


@njit(parallel=True, cache=True)
def _contour_node_velocities(nodes, alpha, coef, gl_nodes, gl_weights, near, out):
    m = nodes.shape[0]
    half = -0.5 * alpha
    corr = 1.0 / (1.0 - alpha)
    n_gl = gl_nodes.shape[0]
    for i in prange(m):
        px = nodes[i, 0]
        py = nodes[i, 1]
        f = np.empty(m)
        for j in range(m):
            if j == i:
                f[j] = 0.0
                continue
            dx = px - nodes[j, 0]
            dy = py - nodes[j, 1]
            f[j] = (dx * dx + dy * dy) ** half
        prev = i - 1 if i > 0 else m - 1
        ux = 0.0
        uy = 0.0
        for j in range(m):
            if j == i or j == prev:
                continue
            k = j + 1 if j + 1 < m else 0
            # index distance from the singular node to the segment's
            # nearest endpoint, so refinement is symmetric about node i
            d1 = j - i if j >= i else i - j
            if d1 > m - d1:
                d1 = m - d1
            d2 = k - i if k >= i else i - k
            if d2 > m - d2:
                d2 = m - d2
            dist = d1 if d1 < d2 else d2
            ex = nodes[k, 0] - nodes[j, 0]
            ey = nodes[k, 1] - nodes[j, 1]
            if dist <= near:
                s = 0.0
                for g in range(n_gl):
                    qx = px - (nodes[j, 0] + gl_nodes[g] * ex)
                    qy = py - (nodes[j, 1] + gl_nodes[g] * ey)
                    s += gl_weights[g] * (qx * qx + qy * qy) ** half
                ux += s * ex
                uy += s * ey
            else:
                w = 0.5 * (f[j] + f[k])
                ux += w * ex
                uy += w * ey
        # Exact power-law integrals over the two segments meeting at node i.
        nxt = i + 1 if i + 1 < m else 0
        dx = nodes[nxt, 0] - px
        dy = nodes[nxt, 1] - py
        scale = (dx * dx + dy * dy) ** half * corr
        ux += scale * dx
        uy += scale * dy
        dx = px - nodes[prev, 0]
        dy = py - nodes[prev, 1]
        scale = (dx * dx + dy * dy) ** half * corr
        ux += scale * dx
        uy += scale * dy
        out[i, 0] = coef * ux
        out[i, 1] = coef * uy


def _node_velocities_raw(nodes, theta0, params: KernelParams) -> np.ndarray:
    out = np.empty_like(nodes)
    _contour_node_velocities(
        nodes, params.alpha, theta0 * params.riesz_constant,
        _GL_NODES, _GL_WEIGHTS, _NEAR_SEGMENTS, out,
    )
    return out


def contour_node_velocities(patch, params: KernelParams) -> np.ndarray:
    """Self-induced velocity at every contour node, in node order."""
    if params.alpha >= 1.0:
        raise ValueError("contour quadrature requires alpha < 1")
    return _node_velocities_raw(patch.nodes, patch.theta0, params)


def velocity_contour(x, patch, params: KernelParams) -> np.ndarray:
    """Velocity induced by a constant patch, by boundary quadrature.

    ``x`` may be a single point or an (n, 2) array.  Points that coincide
    exactly with a contour node are evaluated with the singularity-corrected
    node rule; all other points must lie off the polyline.
    """
    from .fields import ContourPatch  # cycle-free: fields imports nothing from here

    if not isinstance(patch, ContourPatch):
        raise TypeError("velocity_contour expects a ContourPatch")
    if params.alpha >= 1.0:
        raise ValueError("contour quadrature requires alpha < 1")
    from .geometry import require_simple

    require_simple(patch.nodes, "velocity_contour")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 2 or not np.all(np.isfinite(pts)):
        raise ValueError("x must be a finite point or an (n, 2) array")
    out = np.empty_like(pts)
    coef = patch.theta0 * params.riesz_constant

    # Route points that exactly match a node through the corrected rule.
    nodes = patch.nodes
    node_match = np.full(pts.shape[0], -1, dtype=np.int64)
    for i, p in enumerate(pts):
        hits = np.nonzero((nodes[:, 0] == p[0]) & (nodes[:, 1] == p[1]))[0]
        if hits.size:
            node_match[i] = hits[0]
    plain = node_match < 0
    if np.any(plain):
        sub = np.ascontiguousarray(pts[plain])
        res = np.empty_like(sub)
        _contour_velocity_points(sub, nodes, params.alpha, coef, res)
        out[plain] = res
    if np.any(~plain):
        node_out = _node_velocities_raw(nodes, patch.theta0, params)
        out[~plain] = node_out[node_match[~plain]]
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Threading and the audit table
# ---------------------------------------------------------------------------

def set_threads(n: int | None) -> int:
    """Set the worker count for the data-parallel kernels.

    Values are clamped to [1, available].  Returns the count in effect.
    Results do not depend on this setting; per-target accumulation order
    is fixed.
    """
    limit = numba.config.NUMBA_NUM_THREADS
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


def kernel_table(alphas) -> list[tuple[float, float, float]]:
    """Rows of (alpha, riesz_constant, kernel_prefactor) for an alpha grid."""
    rows = []
    for a in np.asarray(alphas, dtype=float).ravel():
        c = riesz_constant(float(a))
        rows.append((float(a), c, float(a) * c))
    return rows
