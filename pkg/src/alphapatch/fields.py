"""Field discretizations and initial-condition generators.

Two discretizations of a positive compactly supported scalar field are
supported: a blob-regularized particle cloud carrying the field's mass at
Lagrangian points, and a single closed contour bounding a patch of
constant value.

Generators build deterministic initial fields inside a ball of radius
``radius`` around a given center.  Particle generators discretize a target
density on a uniform cell grid (weight = density * cell area), which keeps
mass, center and moments close to their continuum values; the random-blob
generator draws its density parameters from a seeded generator and is the
only stochastic one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, GeometryError
from .geometry import polygon_area, require_simple


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParticleField:
    """Regularized Lagrangian discretization of the scalar field.

    positions : (n, 2) particle centers
    weights : (n,) positive masses (value times area carried per particle)
    eps : blob radius of the mollified kernel
    max_theta_density : value of the underlying field each particle samples
    """

    positions: np.ndarray
    weights: np.ndarray
    eps: float
    max_theta_density: float

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        if w.shape != (pos.shape[0],) or pos.shape[0] < 1:
            raise ValueError("weights must match positions and be non-empty")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(w)):
            raise ValueError("positions and weights must be finite")
        if np.any(w <= 0.0):
            raise ValueError("all weights must be positive")
        if not (self.eps > 0.0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if not (self.max_theta_density > 0.0):
            raise ValueError("max_theta_density must be positive")
        object.__setattr__(self, "positions", _freeze(pos))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def with_positions(self, positions: np.ndarray) -> "ParticleField":
        return replace(self, positions=positions)

    def translated(self, offset) -> "ParticleField":
        return self.with_positions(self.positions + np.asarray(offset, dtype=float))


@dataclass(frozen=True)
class ContourPatch:
    """Closed counterclockwise polyline bounding a constant-value patch.

    nodes : (m, 2) vertices, m >= 16, counterclockwise, not self-intersecting
    theta0 : patch value (also the field's maximum norm)
    target_spacing : node spacing that redistribution restores
    """

    nodes: np.ndarray
    theta0: float
    target_spacing: float

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 16:
            raise GeometryError("contour needs at least 16 nodes as an (m, 2) array")
        if not np.all(np.isfinite(nodes)):
            raise GeometryError("contour nodes must be finite")
        if polygon_area(nodes) <= 0.0:
            raise GeometryError("contour must be counterclockwise with positive area")
        if not (self.theta0 > 0.0 and np.isfinite(self.theta0)):
            raise ValueError("theta0 must be positive")
        if not (self.target_spacing > 0.0 and np.isfinite(self.target_spacing)):
            raise ValueError("target_spacing must be positive")
        object.__setattr__(self, "nodes", _freeze(nodes))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def area(self) -> float:
        return polygon_area(self.nodes)

    def with_nodes(self, nodes: np.ndarray) -> "ContourPatch":
        return replace(self, nodes=nodes)

    def translated(self, offset) -> "ContourPatch":
        return self.with_nodes(self.nodes + np.asarray(offset, dtype=float))


Field = ParticleField | ContourPatch


# ---------------------------------------------------------------------------
# Particle generators
# ---------------------------------------------------------------------------

def _grid_cells(bbox_min, bbox_max, spacing):
    nx = max(1, int(np.ceil((bbox_max[0] - bbox_min[0]) / spacing)))
    ny = max(1, int(np.ceil((bbox_max[1] - bbox_min[1]) / spacing)))
    xs = bbox_min[0] + (np.arange(nx) + 0.5) * spacing
    ys = bbox_min[1] + (np.arange(ny) + 0.5) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _particles_from_density(density_fn, bbox_min, bbox_max, support_area, n_target, eps=None):
    # Cell size from the support area so the kept count lands near n_target.
    h = float(np.sqrt(support_area / n_target))
    pts = _grid_cells(np.asarray(bbox_min, float), np.asarray(bbox_max, float), h)
    dens = density_fn(pts)
    keep = dens > 0.0
    if not np.any(keep):
        raise ConfigError("initial condition has empty support on the sampling grid")
    pts = pts[keep]
    dens = dens[keep]
    weights = dens * h * h
    if eps is None:
        eps = 0.5 * h
    return pts, weights, float(eps), float(dens.max())


def disk_particles(radius=1.0, center=(0.0, 0.0), theta0=1.0, n_particles=4096, eps=None) -> ParticleField:
    """Uniform disk of value theta0, discretized on a grid."""
    if radius <= 0.0:
        raise ConfigError("disk radius must be positive")
    c = np.asarray(center, float)

    def dens(p):
        r = np.linalg.norm(p - c, axis=1)
        return np.where(r <= radius, theta0, 0.0)

    pos, w, eps, mx = _particles_from_density(
        dens, c - radius, c + radius, np.pi * radius ** 2, n_particles, eps
    )
    return ParticleField(pos, w, eps, mx)


def annulus_particles(r_inner, r_outer, center=(0.0, 0.0), theta0=1.0, n_particles=4096, eps=None) -> ParticleField:
    """Uniform annulus r_inner < |x - c| <= r_outer."""
    if not (0.0 < r_inner < r_outer):
        raise ConfigError("annulus requires 0 < r_inner < r_outer")
    c = np.asarray(center, float)

    def dens(p):
        r = np.linalg.norm(p - c, axis=1)
        return np.where((r > r_inner) & (r <= r_outer), theta0, 0.0)

    pos, w, eps, mx = _particles_from_density(
        dens, c - r_outer, c + r_outer, np.pi * (r_outer ** 2 - r_inner ** 2), n_particles, eps
    )
    return ParticleField(pos, w, eps, mx)


def two_disks_particles(
    radius1=1.0,
    radius2=0.6,
    center1=(-1.5, 0.0),
    center2=(1.5, 0.3),
    theta1=1.0,
    theta2=1.0,
    n_particles=4096,
    eps=None,
) -> ParticleField:
    """Two uniform disks; unequal radii or values give an asymmetric field."""
    if radius1 <= 0.0 or radius2 <= 0.0:
        raise ConfigError("disk radii must be positive")
    c1 = np.asarray(center1, float)
    c2 = np.asarray(center2, float)

    def dens(p):
        in1 = np.linalg.norm(p - c1, axis=1) <= radius1
        in2 = np.linalg.norm(p - c2, axis=1) <= radius2
        return np.where(in1, theta1, 0.0) + np.where(in2 & ~in1, theta2, 0.0)

    lo = np.minimum(c1 - radius1, c2 - radius2)
    hi = np.maximum(c1 + radius1, c2 + radius2)
    pos, w, eps, mx = _particles_from_density(
        dens, lo, hi, np.pi * (radius1 ** 2 + radius2 ** 2), n_particles, eps
    )
    return ParticleField(pos, w, eps, mx)


def random_blob_particles(
    radius=2.0,
    n_blobs=4,
    n_particles=4096,
    rng=None,
    amplitude_range=(0.5, 1.0),
    width_range=(0.15, 0.3),
    floor_fraction=1e-3,
    eps=None,
) -> ParticleField:
    """Seeded superposition of Gaussian bumps truncated to the ball |x| <= radius.

    Blob centers are drawn inside 0.6 * radius and widths are fractions of
    the ball radius, so the field is well inside its stated support.  Cells
    below ``floor_fraction`` of the peak density are dropped to keep all
    weights positive.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if radius <= 0.0 or n_blobs < 1:
        raise ConfigError("random-blobs requires positive radius and n_blobs >= 1")
    centers = rng.uniform(-0.6 * radius, 0.6 * radius, size=(n_blobs, 2))
    amps = rng.uniform(*amplitude_range, size=n_blobs)
    widths = rng.uniform(width_range[0] * radius, width_range[1] * radius, size=n_blobs)

    def raw(p):
        d2 = ((p[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        return (amps[None, :] * np.exp(-0.5 * d2 / widths[None, :] ** 2)).sum(axis=1)

    # Effective support area from a coarse pass, then the real sampling pass.
    coarse = _grid_cells((-radius, -radius), (radius, radius), radius / 32.0)
    cd = raw(coarse)
    inside = np.linalg.norm(coarse, axis=1) <= radius
    peak = cd[inside].max()
    frac = np.mean((cd >= floor_fraction * peak) & inside)
    area = max(frac * 4.0 * radius ** 2, 1e-3 * radius ** 2)

    def dens(p):
        v = raw(p)
        ok = (np.linalg.norm(p, axis=1) <= radius) & (v >= floor_fraction * peak)
        return np.where(ok, v, 0.0)

    pos, w, eps, mx = _particles_from_density(
        dens, (-radius, -radius), (radius, radius), area, n_particles, eps
    )
    return ParticleField(pos, w, eps, mx)


# ---------------------------------------------------------------------------
# Contour generators
# ---------------------------------------------------------------------------

def disk_contour(radius=1.0, center=(0.0, 0.0), theta0=1.0, n_nodes=512) -> ContourPatch:
    """Circle of ``n_nodes`` uniformly spaced nodes, counterclockwise."""
    if radius <= 0.0:
        raise ConfigError("disk radius must be positive")
    if n_nodes < 16:
        raise ConfigError("disk contour needs at least 16 nodes")
    ang = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = np.asarray(center, float) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return ContourPatch(nodes, theta0, 2.0 * np.pi * radius / n_nodes)


def two_disks_contour(
    radius1=1.0,
    radius2=1.0,
    center1=(-0.9, 0.0),
    center2=(0.9, 0.0),
    theta0=1.0,
    n_nodes=512,
) -> ContourPatch:
    """Boundary of the union of two overlapping disks (a single closed curve).

    The disks must overlap without one containing the other, otherwise the
    union boundary is not a single curve and a ConfigError is raised.
    """
    c1 = np.asarray(center1, float)
    c2 = np.asarray(center2, float)
    d = float(np.linalg.norm(c2 - c1))
    if not (abs(radius1 - radius2) < d < radius1 + radius2):
        raise ConfigError(
            "two-disks contour requires overlapping disks with neither containing the other"
        )
    u = (c2 - c1) / d
    base = np.arctan2(u[1], u[0])
    a = (d * d + radius1 ** 2 - radius2 ** 2) / (2.0 * d)
    half = np.sqrt(radius1 ** 2 - a * a)
    beta1 = np.arctan2(half, a)
    beta2 = np.arctan2(half, a - d)

    arc1 = 2.0 * (np.pi - beta1) * radius1
    arc2 = 2.0 * beta2 * radius2
    n1 = max(8, int(round(n_nodes * arc1 / (arc1 + arc2))))
    n2 = max(8, n_nodes - n1)
    # Arc of circle 1 away from circle 2: angles beta1 .. 2 pi - beta1.
    t1 = base + beta1 + (2.0 * np.pi - 2.0 * beta1) * np.arange(n1) / n1
    # Arc of circle 2 away from circle 1: angles -beta2 .. beta2 through 0.
    t2 = base - beta2 + 2.0 * beta2 * np.arange(n2) / n2
    nodes = np.vstack(
        [
            c1 + radius1 * np.column_stack([np.cos(t1), np.sin(t1)]),
            c2 + radius2 * np.column_stack([np.cos(t2), np.sin(t2)]),
        ]
    )
    spacing = (arc1 + arc2) / (n1 + n2)
    patch = ContourPatch(nodes, theta0, spacing)
    require_simple(patch.nodes, "two-disks contour construction")
    return patch


# ---------------------------------------------------------------------------
# Tagged dispatch used by the run configuration
# ---------------------------------------------------------------------------

_PARTICLE_BUILDERS = {
    "disk": disk_particles,
    "annulus": annulus_particles,
    "two-disks": two_disks_particles,
    "random-blobs": random_blob_particles,
}

_CONTOUR_BUILDERS = {
    "disk": disk_contour,
    "two-disks": two_disks_contour,
}

IC_PARAMETERS = {
    "disk": {"radius", "center", "theta0", "n_particles", "n_nodes"},
    "annulus": {"r_inner", "r_outer", "center", "theta0", "n_particles"},
    "two-disks": {
        "radius1", "radius2", "center1", "center2",
        "theta1", "theta2", "theta0", "n_particles", "n_nodes",
    },
    "random-blobs": {
        "radius", "n_blobs", "n_particles",
        "amplitude_range", "width_range", "floor_fraction",
    },
}


def validate_initial_condition(ic: dict) -> None:
    """Check the tagged initial-condition mapping, naming any bad field."""
    if not isinstance(ic, dict):
        raise ConfigError("initial_condition must be a mapping with a 'type' key")
    kind = ic.get("type")
    if kind not in IC_PARAMETERS:
        raise ConfigError(
            f"initial_condition.type must be one of {sorted(IC_PARAMETERS)}, got {kind!r}"
        )
    unknown = set(ic) - {"type"} - IC_PARAMETERS[kind]
    if unknown:
        raise ConfigError(f"unknown initial_condition keys for {kind!r}: {sorted(unknown)}")


def build_initial_field(ic: dict, representation: str, seed: int = 0, eps=None) -> Field:
    """Construct the initial field described by a tagged mapping.

    ``representation`` selects particles or contour; the contour form only
    exists for single-boundary conditions (disk and overlapping two-disks).
    """
    validate_initial_condition(ic)
    kind = ic["type"]
    kwargs = {k: v for k, v in ic.items() if k != "type"}
    for key in ("center", "center1", "center2"):
        if key in kwargs:
            kwargs[key] = tuple(float(v) for v in kwargs[key])
    if representation == "particles":
        kwargs.pop("n_nodes", None)
        if kind == "two-disks" and "theta0" in kwargs:
            t0 = kwargs.pop("theta0")
            kwargs.setdefault("theta1", t0)
            kwargs.setdefault("theta2", t0)
        builder = _PARTICLE_BUILDERS[kind]
        if kind == "random-blobs":
            kwargs["rng"] = np.random.default_rng(seed)
        if eps is not None:
            kwargs["eps"] = eps
        return builder(**kwargs)
    if representation == "contour":
        if kind not in _CONTOUR_BUILDERS:
            raise ConfigError(
                f"initial condition {kind!r} has no single-contour form; use particles"
            )
        kwargs.pop("n_particles", None)
        kwargs.pop("theta1", None)
        kwargs.pop("theta2", None)
        return _CONTOUR_BUILDERS[kind](**kwargs)
    raise ConfigError(f"representation must be 'particles' or 'contour', got {representation!r}")
