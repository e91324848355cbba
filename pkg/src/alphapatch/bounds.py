"""Quantitative estimate checkers operating on trajectories and fields.

Each checker fits whatever constant the corresponding estimate leaves
undetermined and reports a BoundReport with the fitted values, a
worst-case margin, and a pass/fail verdict.  The envelope constants are
never given numerically by the theory, so the checks test stability of the
fit (refit on part of the data) and measured exponents against the stated
rates, rather than comparing to fixed constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .diagnostics import (
    conserved_quantities,
    radial_velocity_probe,
    recentered,
    support_radius,
    tail_mass,
)
from .dynamics import Trajectory
from .fields import Field
from .kernel import KernelParams

GROWTH_DELTA_FACTOR = 1e-3          # delta = factor * R0 regularizes log of tiny growth
CONFINEMENT_STABILITY = 0.10
MOMENT_STABILITY = 0.20
DECAY_SLOPE_TOLERANCE = 0.2
VACUOUS_VELOCITY = 1e-12


@dataclass
class BoundReport:
    """Outcome of one estimate check."""

    check_name: str
    constants: dict[str, float]
    passed: bool
    margin: float
    samples: int
    notes: list[str] = dataclass_field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> str:
        payload = {
            "check_name": self.check_name,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "verdict": self.verdict,
            "margin": float(self.margin),
            "samples": int(self.samples),
            "notes": list(self.notes),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        d = json.loads(text)
        return cls(
            check_name=d["check_name"],
            constants=d["constants"],
            passed=d["verdict"] == "pass",
            margin=d["margin"],
            samples=d["samples"],
            notes=list(d.get("notes", [])),
        )


def _rel_change(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# Support confinement envelope
# ---------------------------------------------------------------------------

def confinement_envelope(t, R0: float, C0: float, alpha: float):
    """Envelope radius 4 R0 + C0 (t ln(2 + t))^(1/(4+alpha)).

    Vectorized over ``t``.
    """
    if R0 <= 0.0 or C0 < 0.0:
        raise ValueError("confinement envelope needs R0 > 0 and C0 >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("envelope time must be >= 0")
    value = 4.0 * R0 + C0 * (t * np.log(2.0 + t)) ** (1.0 / (4.0 + alpha))
    return float(value) if value.ndim == 0 else value


def _fit_envelope_constant(times, radii, R0, alpha):
    grow = np.asarray(radii) - 4.0 * R0
    scale = (times * np.log(2.0 + times)) ** (1.0 / (4.0 + alpha))
    return max(0.0, float((grow / scale).max()))


def check_confinement(traj: Trajectory, alpha: float) -> BoundReport:
    """Fit the smallest envelope constant covering the whole trajectory.

    Passes when the fit is finite and stable: refitting on the first half
    changes it by at most 10 percent.  Also reports the growth exponent
    p_hat, the log-log slope of the support-radius growth over time
    (delta-regularized, with negative growth clamped to zero).
    """
    records = traj.records()
    if len(records) < 10 or records[-1].t <= 0.0:
        raise ValueError("check_confinement needs >= 10 snapshots and t_end > 0")
    times = np.array([r.t for r in records])
    radii = np.array([r.support_radius for r in records])
    R0 = radii[0]
    later = times > 0.0
    c0_full = _fit_envelope_constant(times[later], radii[later], R0, alpha)
    half_mask = later & (times <= times[-1] / 2.0)
    if np.any(half_mask):
        c0_half = _fit_envelope_constant(times[half_mask], radii[half_mask], R0, alpha)
    else:
        c0_half = c0_full
    delta = GROWTH_DELTA_FACTOR * R0
    growth = np.maximum(radii[later] - R0, 0.0) + delta
    p_hat = _slope(np.log(times[later]), np.log(growth))

    notes = []
    if c0_full == 0.0:
        notes.append("support never exceeded 4 R0; envelope trivially satisfied")
        passed = True
    else:
        passed = np.isfinite(c0_full) and _rel_change(c0_full, c0_half) <= CONFINEMENT_STABILITY
    envelope = confinement_envelope(times[later], R0, c0_full, alpha)
    margin = float((radii[later] / envelope).max())
    return BoundReport(
        check_name="confinement",
        constants={
            "C0_hat": c0_full,
            "C0_hat_half": c0_half,
            "p_hat": p_hat,
            "R0": float(R0),
            "delta": delta,
        },
        passed=bool(passed),
        margin=margin,
        samples=int(later.sum()),
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Generalized moment hierarchy
# ---------------------------------------------------------------------------

def moment_bound_rhs(n: int, t: float, m0: float, R0: float, i0: float,
                     C0: float, alpha: float) -> float:
    """Right side m0 (R0^(4+alpha) + C0 i0 n^(1+alpha) t)^n, in the log domain."""
    if n < 1 or m0 <= 0.0 or R0 <= 0.0 or i0 <= 0.0 or C0 < 0.0 or t < 0.0:
        raise ValueError("moment_bound_rhs needs n >= 1, t >= 0 and positive constants")
    base = R0 ** (4.0 + alpha) + C0 * i0 * n ** (1.0 + alpha) * t
    log_value = math.log(m0) + n * math.log(base)
    if log_value > math.log(np.finfo(float).max):
        raise OverflowError("moment bound exceeds the floating-point range")
    return math.exp(log_value)


def _nth_root(mom: float, m0: float, n: int) -> float:
    return 0.0 if mom <= 0.0 else math.exp(math.log(mom / m0) / n)


def _fit_moment_constant(records, n_values, m0, R0, i0, alpha):
    c0 = 0.0
    base = R0 ** (4.0 + alpha)
    for rec in records:
        if rec.t <= 0.0:
            continue
        for n in n_values:
            root = _nth_root(rec.moments[n - 1], m0, n)
            c0 = max(c0, (root - base) / (i0 * n ** (1.0 + alpha) * rec.t))
    return max(0.0, c0)


def check_moment_hierarchy(traj: Trajectory, alpha: float, n_max: int = 6) -> BoundReport:
    """Fit one constant covering m_n(t) for every recorded n and t.

    The fit makes the bound hold with margin <= 1 by construction; the
    verdict tests its stability under halving the trajectory (20 percent)
    plus the regression described in the constants: per-n slopes of
    m_n^(1/n) against time, regressed on log-log axes against n.
    """
    records = traj.records()
    if not records or len(records[0].moments) < n_max:
        raise ValueError(f"trajectory records do not carry moments up to n = {n_max}")
    first = records[0]
    m0, R0, i0 = first.mass, first.support_radius, first.inertia
    n_values = range(1, n_max + 1)
    c0_full = _fit_moment_constant(records, n_values, m0, R0, i0, alpha)
    t_end = records[-1].t
    half = [r for r in records if r.t <= t_end / 2.0]
    c0_half = _fit_moment_constant(half, n_values, m0, R0, i0, alpha) if len(half) > 1 else c0_full

    times = np.array([r.t for r in records])
    margin = 0.0
    for rec in records:
        if rec.t <= 0.0:
            continue
        for n in n_values:
            rhs_val = moment_bound_rhs(n, rec.t, m0, R0, i0, c0_full, alpha)
            margin = max(margin, rec.moments[n - 1] / rhs_val)

    notes = []
    if len(records) >= 2:
        slopes = []
        for n in n_values:
            roots = np.array([_nth_root(r.moments[n - 1], m0, n) for r in records])
            slopes.append(_slope(times, roots))
        slopes = np.array(slopes)
        if np.all(slopes > 0.0):
            slope_exponent = _slope(np.log(np.arange(1, n_max + 1)), np.log(slopes))
        else:
            slope_exponent = float("nan")
            notes.append("some per-n moment slopes are non-positive; slope regression skipped")
    else:
        slope_exponent = float("nan")
        notes.append("single snapshot; slope regression skipped")

    if c0_full == 0.0:
        notes.append("moments never exceeded their initial envelope; bound trivially satisfied")
        passed = True
    else:
        passed = np.isfinite(c0_full) and _rel_change(c0_full, c0_half) <= MOMENT_STABILITY
    return BoundReport(
        check_name="moment_hierarchy",
        constants={
            "C0_hat": c0_full,
            "C0_hat_half": c0_half,
            "slope_exponent": slope_exponent,
            "m0": m0,
            "R0": R0,
            "i0": i0,
        },
        passed=bool(passed),
        margin=float(margin),
        samples=sum(1 for r in records if r.t > 0.0) * n_max,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Tail mass beyond the envelope
# ---------------------------------------------------------------------------

def check_tail_mass(traj: Trajectory, alpha: float, k: float,
                    radius_factors=(1.0, 1.25, 1.5, 2.0, 3.0)) -> BoundReport:
    """Fit C_hat with tail_mass(field, r/2) <= C_hat r^(-k) beyond the envelope.

    Sample radii are multiples of the fitted confinement envelope at each
    snapshot time.  Fields fully inside half the sampled radii give zero
    tails and the check is reported as vacuously consistent.
    """
    if not (k > 0.0):
        raise ValueError(f"tail exponent k must be positive, got {k!r}")
    conf = check_confinement(traj, alpha)
    R0 = conf.constants["R0"]
    c0 = conf.constants["C0_hat"]
    c_hat = 0.0
    samples = 0
    for entry in traj.entries:
        env = confinement_envelope(entry.time, R0, c0, alpha)
        for f in radius_factors:
            r = f * env
            tail = tail_mass(entry.field, r / 2.0)
            c_hat = max(c_hat, tail * r ** k)
            samples += 1
    notes = []
    if c_hat == 0.0:
        notes.append("tail mass beyond the envelope is zero for all snapshots")
        margin = 0.0
    else:
        margin = 1.0
    return BoundReport(
        check_name="tail_mass",
        constants={"C_hat": c_hat, "k": k, "C0_hat": c0, "R0": R0},
        passed=True,
        margin=margin,
        samples=samples,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Far-field radial velocity decay
# ---------------------------------------------------------------------------

def check_radial_decay(field: Field, params: KernelParams,
                       radius_factors=(8.0, 16.0, 32.0, 64.0),
                       n_angles: int = 64) -> BoundReport:
    """Fit the log-log decay rate of the radial velocity at large radii.

    The field is recentered, probed on circles at the given multiples of
    its support radius, and the fitted slope must be at most
    -(3 + alpha) + 0.2.  Radially symmetric fields produce no radial
    velocity; they are reported as a vacuous pass.
    """
    centered = recentered(field)
    r_supp = support_radius(centered)
    radii = [f * r_supp for f in radius_factors]
    probe = radial_velocity_probe(centered, params, radii, n_angles)
    values = np.array([v for _, v in probe])
    threshold = -(3.0 + params.alpha) + DECAY_SLOPE_TOLERANCE
    scale = max(values.max(), 0.0)
    constants = {"slope_threshold": threshold, "r_supp": r_supp}
    # vacuity is judged against the monopole speed at the innermost probe:
    # a symmetric field leaves only rounding residue of that scale
    mass, _, _, _ = conserved_quantities(centered)
    speed_scale = mass * params.kernel_prefactor / radii[0] ** (1.0 + params.alpha)
    if scale < VACUOUS_VELOCITY * speed_scale:
        return BoundReport(
            check_name="radial_decay",
            constants={**constants, "slope_hat": float("nan"), "max_u_r": scale},
            passed=True,
            margin=0.0,
            samples=len(radii) * n_angles,
            notes=["symmetric: decay check vacuous"],
        )
    slope = _slope(np.log(np.array(radii)), np.log(values))
    passed = slope <= threshold
    margin = threshold / slope if slope < 0.0 else float("inf")
    return BoundReport(
        check_name="radial_decay",
        constants={**constants, "slope_hat": slope, "max_u_r": scale},
        passed=bool(passed),
        margin=float(margin),
        samples=len(radii) * n_angles,
        notes=[],
    )


# ---------------------------------------------------------------------------
# Interpolation inequality with the explicit split constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Nonnegative scalar field sampled at the centers of a square-cell grid."""

    values: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)
    cell: float = 1.0 / 64.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("GridField values must be a 2-D array")
        if np.any(v < 0.0) or not np.all(np.isfinite(v)):
            raise ValueError("GridField values must be finite and nonnegative")
        if not (self.cell > 0.0):
            raise ValueError("cell size must be positive")
        object.__setattr__(self, "values", v)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.values.shape
        x = self.origin[0] + (np.arange(nx) + 0.5) * self.cell
        y = self.origin[1] + (np.arange(ny) + 0.5) * self.cell
        return x, y

    def extent(self) -> tuple[float, float, float, float]:
        ny, nx = self.values.shape
        return (self.origin[0], self.origin[1],
                self.origin[0] + nx * self.cell, self.origin[1] + ny * self.cell)

    def norm_l1(self) -> float:
        return float(self.values.sum()) * self.cell ** 2

    def norm_lp(self, p: float) -> float:
        if p == math.inf:
            return float(self.values.max())
        return float((self.values ** p).sum() * self.cell ** 2) ** (1.0 / p)


def lemma_constant(beta: float, p: float) -> float:
    """Explicit constant of the Hoelder-split interpolation inequality.

    For p = inf the constant is 1 + 2 pi / (2 - beta); for finite p it is
    1 + (2 pi / (2 - beta q))^(1/q) with q = p/(p-1), requiring
    p > 2/(2-beta) so the near-region norm is finite.
    """
    if not (0.0 < beta < 2.0):
        raise ValueError(f"beta must be in (0, 2), got {beta!r}")
    if p == math.inf:
        return 1.0 + 2.0 * math.pi / (2.0 - beta)
    if not (p > 2.0 / (2.0 - beta)):
        raise ValueError(f"p must exceed 2/(2-beta) = {2.0 / (2.0 - beta)}, got {p!r}")
    q = p / (p - 1.0)
    return 1.0 + (2.0 * math.pi / (2.0 - beta * q)) ** (1.0 / q)


_ANGLE_NODES, _ANGLE_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _corner_integral(a: float, b: float, beta: float) -> float:
    # integral of (u^2 + v^2)^(-beta/2) over [0,|a|] x [0,|b|], signed by
    # the quadrant; in polar form the radial part is exact and the angular
    # part is smooth, so fixed Gauss-Legendre is plenty
    sign = np.sign(a) * np.sign(b)
    a, b = abs(a), abs(b)
    if a == 0.0 or b == 0.0:
        return 0.0
    phi0 = math.atan2(b, a)
    pow_ = 2.0 - beta

    def angular(lo, hi, f):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        phi = mid + half * _ANGLE_NODES
        return half * float((_ANGLE_WEIGHTS * f(phi)).sum())

    piece1 = a ** pow_ * angular(0.0, phi0, lambda t: np.cos(t) ** (beta - 2.0))
    piece2 = b ** pow_ * angular(phi0, 0.5 * math.pi, lambda t: np.sin(t) ** (beta - 2.0))
    return sign * (piece1 + piece2) / pow_


def _cell_integral(x: np.ndarray, x0: float, y0: float, cell: float, beta: float) -> float:
    # exact integral of |x - y|^(-beta) over one grid cell via signed
    # corner decomposition; valid whether x is inside or outside the cell
    ax0 = x0 - x[0]
    ax1 = x0 + cell - x[0]
    ay0 = y0 - x[1]
    ay1 = y0 + cell - x[1]
    return (
        _corner_integral(ax1, ay1, beta)
        - _corner_integral(ax0, ay1, beta)
        - _corner_integral(ax1, ay0, beta)
        + _corner_integral(ax0, ay0, beta)
    )


def riesz_potential_at(h: GridField, x: np.ndarray, beta: float) -> float:
    """Grid quadrature of integral h(y) / |x - y|^beta dy.

    Midpoint rule over cells, except that cells near x use the exact
    integral of the kernel over the cell rectangle (the field is constant
    per cell), so the integrable singularity is resolved, not sampled.
    """
    xg, yg = h.centers()
    dx = x[0] - xg[None, :]
    dy = x[1] - yg[:, None]
    d2 = dx * dx + dy * dy
    near = d2 <= (2.0 * h.cell) ** 2
    far_vals = np.where(near, 0.0, h.values)
    with np.errstate(divide="ignore"):
        total = float((far_vals * d2 ** (-0.5 * beta)).sum()) * h.cell ** 2
    if np.any(near):
        jj, ii = np.nonzero(near)
        for j, i in zip(jj, ii):
            if h.values[j, i] == 0.0:
                continue
            total += h.values[j, i] * _cell_integral(
                x, h.origin[0] + i * h.cell, h.origin[1] + j * h.cell, h.cell, beta
            )
    return total


def random_grid_field(seed: int, n: int = 64, extent: float = 1.0,
                      n_blobs: int = 5) -> GridField:
    """Seeded random nonnegative field: a few Gaussian bumps on [0, extent]^2."""
    rng = np.random.default_rng(seed)
    cell = extent / n
    coords = (np.arange(n) + 0.5) * cell
    gx, gy = np.meshgrid(coords, coords, indexing="xy")
    values = np.zeros((n, n))
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0.1 * extent, 0.9 * extent, size=2)
        sigma = rng.uniform(0.03, 0.15) * extent
        amp = rng.uniform(0.2, 1.0)
        values += amp * np.exp(-((gx - cx) ** 2 + (gy - cy) ** 2) / (2.0 * sigma ** 2))
    return GridField(values, origin=(0.0, 0.0), cell=cell)


def interpolation_lemma_check(h: GridField, beta: float, p: float,
                              n_points: int = 100, seed: int = 0,
                              tolerance: float = 1e-2) -> BoundReport:
    """Verify the interpolation inequality with its explicit constant.

    Evaluates the left side at ``n_points`` seeded random locations over
    the grid's bounding box and compares against
    C(beta, p) ||h||_1^((2-beta-2/p)/(2-2/p)) ||h||_p^(beta/(2-2/p)),
    allowing the stated quadrature tolerance.  The inequality is a theorem,
    so a failure beyond tolerance indicates an implementation bug.
    """
    constant = lemma_constant(beta, p)  # also validates beta and p
    inv_p = 0.0 if p == math.inf else 1.0 / p
    norm1 = h.norm_l1()
    normp = h.norm_lp(p)
    exponent1 = (2.0 - beta - 2.0 * inv_p) / (2.0 - 2.0 * inv_p)
    exponentp = beta / (2.0 - 2.0 * inv_p)
    rhs = constant * norm1 ** exponent1 * normp ** exponentp if norm1 > 0.0 else 0.0

    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = h.extent()
    xs = rng.uniform((x0, y0), (x1, y1), size=(n_points, 2))
    lhs = np.array([riesz_potential_at(h, x, beta) for x in xs])
    max_lhs = float(lhs.max()) if n_points else 0.0
    if rhs == 0.0:
        passed = max_lhs == 0.0
        margin = 0.0 if passed else float("inf")
    else:
        margin = max_lhs / (rhs * (1.0 + tolerance))
        passed = margin <= 1.0
    return BoundReport(
        check_name="interpolation_lemma",
        constants={
            "C": constant,
            "beta": beta,
            "p": float(p) if p != math.inf else float("inf"),
            "norm_l1": norm1,
            "norm_lp": normp,
            "rhs": rhs,
            "max_lhs": max_lhs,
        },
        passed=bool(passed),
        margin=float(margin),
        samples=n_points,
        notes=[],
    )
