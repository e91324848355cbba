"""Time evolution of particle and contour fields under their own velocity.

The scalar field is transported by the flow, so material points simply move
with the self-induced velocity; weights and patch values never change.
Integration is classical fixed-step RK4.  Contours get their nodes
redistributed to uniform arc spacing after every step and the run halts
with a GeometryError if the contour self-intersects.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Any, Mapping

import numpy as np

from .diagnostics import N_MAX_MOMENTS, DiagnosticsRecord, make_record
from .errors import BlowUpError, ConfigError, GeometryError
from .fields import (
    ContourPatch,
    Field,
    ParticleField,
    build_initial_field,
    validate_initial_condition,
)
from .geometry import polygon_area, require_simple, resample_closed_curve, rescale_to_area
from .kernel import KernelParams, _node_velocities_raw, _velocity_direct

INTEGRATORS = ("rk4",)
REPRESENTATIONS = ("particles", "contour")


@dataclass(frozen=True)
class SimConfig:
    """Validated description of one run."""

    alpha: float
    t_end: float
    initial_condition: Mapping[str, Any]
    dt: float = 0.02
    integrator: str = "rk4"
    representation: str = "particles"
    output_stride: int = 10
    seed: int = 0
    eps: float | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha outside (0,1]: {self.alpha!r}")
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_end >= 0.0 and np.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be >= 0, got {self.t_end!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(
                f"representation must be one of {REPRESENTATIONS}, got {self.representation!r}"
            )
        if not (isinstance(self.output_stride, int) and self.output_stride >= 1):
            raise ConfigError(f"output_stride must be an integer >= 1, got {self.output_stride!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.eps is not None and not (self.eps > 0.0):
            raise ConfigError(f"eps must be positive when given, got {self.eps!r}")
        validate_initial_condition(dict(self.initial_condition))
        if self.representation == "contour" and self.alpha >= 1.0:
            raise ConfigError("contour runs require alpha < 1")


@dataclass(frozen=True)
class TrajectoryEntry:
    time: float
    field: Field
    record: DiagnosticsRecord


@dataclass
class Trajectory:
    """Snapshots of one run, in strictly increasing time starting at 0."""

    alpha: float
    entries: list[TrajectoryEntry] = dataclass_field(default_factory=list)

    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.entries])

    def records(self) -> list[DiagnosticsRecord]:
        return [e.record for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _particle_velocities(positions, weights, eps, params):
    out = np.empty_like(positions)
    _velocity_direct(positions, positions, weights, eps, params.alpha,
                     params.kernel_prefactor, out)
    return out


def _contour_velocities(nodes, theta0, params):
    return _node_velocities_raw(nodes, theta0, params)


def rhs(field: Field, params: KernelParams) -> np.ndarray:
    """Velocity of every material point under the field's own flow."""
    if isinstance(field, ParticleField):
        return _particle_velocities(field.positions, field.weights, field.eps, params)
    if isinstance(field, ContourPatch):
        if params.alpha >= 1.0:
            raise GeometryError("contour dynamics requires alpha < 1")
        return _contour_velocities(field.nodes, field.theta0, params)
    raise TypeError(f"unsupported field type {type(field).__name__}")


def step_rk4(field: Field, dt: float, params: KernelParams) -> Field:
    """One classical RK4 step of all material points; weights unchanged."""
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt!r}")
    if isinstance(field, ParticleField):
        def vel(pos):
            return _particle_velocities(pos, field.weights, field.eps, params)
        y = field.positions
    elif isinstance(field, ContourPatch):
        def vel(pos):
            return _contour_velocities(pos, field.theta0, params)
        y = field.nodes
    else:
        raise TypeError(f"unsupported field type {type(field).__name__}")

    k1 = vel(y)
    k2 = vel(y + (0.5 * dt) * k1)
    k3 = vel(y + (0.5 * dt) * k2)
    k4 = vel(y + dt * k3)
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_new)):
        raise BlowUpError("non-finite positions after RK4 step")
    if isinstance(field, ParticleField):
        return field.with_positions(y_new)
    return field.with_nodes(y_new)


def redistribute_nodes(patch: ContourPatch) -> ContourPatch:
    """Resample contour nodes to uniform arc spacing, preserving area.

    A periodic cubic spline through the nodes is sampled at equispaced
    arc-length values and the result is rescaled about its centroid so the
    enclosed area matches the input exactly; the net per-call area change
    is at the rounding level.  Raises GeometryError if the contour (before
    or after resampling) is self-intersecting.
    """
    require_simple(patch.nodes, "before redistribution")
    area0 = polygon_area(patch.nodes)
    nodes = resample_closed_curve(patch.nodes, patch.target_spacing)
    nodes = rescale_to_area(nodes, area0)
    require_simple(nodes, "after redistribution")
    return patch.with_nodes(nodes)


def evolve(config: SimConfig) -> Trajectory:
    """Integrate the configured initial field to t_end.

    Emits a diagnostics snapshot at t = 0, every ``output_stride`` steps,
    and at the final time.  Deterministic given the seed.  On blow-up or
    contour self-intersection the raised error carries the failure time
    and the partial trajectory collected so far.
    """
    params = KernelParams.from_alpha(config.alpha)
    field = build_initial_field(
        dict(config.initial_condition), config.representation, config.seed, config.eps
    )
    if isinstance(field, ContourPatch):
        require_simple(field.nodes, "initial condition")

    traj = Trajectory(alpha=config.alpha)
    traj.entries.append(TrajectoryEntry(0.0, field, make_record(field, params, 0.0)))
    if config.t_end == 0.0:
        return traj

    n_full = int(np.floor(config.t_end / config.dt + 1e-12))
    remainder = config.t_end - n_full * config.dt
    if remainder <= 1e-12 * config.dt:
        remainder = 0.0
    n_steps = n_full + (1 if remainder else 0)

    for step in range(1, n_steps + 1):
        dt = config.dt if step <= n_full else remainder
        t = step * config.dt if step <= n_full else config.t_end
        try:
            field = step_rk4(field, dt, params)
            if isinstance(field, ContourPatch):
                field = redistribute_nodes(field)
        except (BlowUpError, GeometryError) as err:
            err.time = t
            err.partial = traj
            raise
        if step % config.output_stride == 0 or step == n_steps:
            traj.entries.append(TrajectoryEntry(t, field, make_record(field, params, t)))
    return traj
