"""Alpha-patch flow simulator and estimate-verification harness.

Simulates the planar active scalar flow whose velocity is the
perpendicular gradient of a Riesz potential of the transported field (the
one-parameter family interpolating 2-D Euler vorticity dynamics and
surface quasi-geostrophic temperature dynamics), using particle and
contour discretizations, and checks simulated trajectories against the
family's conservation laws and confinement-type estimates.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    GridField,
    check_confinement,
    check_moment_hierarchy,
    check_radial_decay,
    check_tail_mass,
    confinement_envelope,
    interpolation_lemma_check,
    lemma_constant,
    moment_bound_rhs,
    random_grid_field,
    riesz_potential_at,
)
from .diagnostics import (
    DiagnosticsRecord,
    conserved_quantities,
    make_record,
    moment,
    radial_velocity_probe,
    recentered,
    support_radius,
    tail_mass,
)
from .dynamics import (
    SimConfig,
    Trajectory,
    TrajectoryEntry,
    evolve,
    redistribute_nodes,
    rhs,
    step_rk4,
)
from .errors import AlphapatchError, BlowUpError, ConfigError, GeometryError
from .fields import (
    ContourPatch,
    ParticleField,
    annulus_particles,
    build_initial_field,
    disk_contour,
    disk_particles,
    random_blob_particles,
    two_disks_contour,
    two_disks_particles,
)
from .kernel import (
    KernelParams,
    contour_node_velocities,
    gamma_fn,
    kernel_eval,
    kernel_eval_blob,
    kernel_table,
    perp,
    riesz_constant,
    set_threads,
    velocity_contour,
    velocity_particles,
)

__all__ = [
    "AlphapatchError",
    "BlowUpError",
    "BoundReport",
    "ConfigError",
    "ContourPatch",
    "DiagnosticsRecord",
    "GeometryError",
    "GridField",
    "KernelParams",
    "ParticleField",
    "SimConfig",
    "Trajectory",
    "TrajectoryEntry",
    "annulus_particles",
    "build_initial_field",
    "check_confinement",
    "check_moment_hierarchy",
    "check_radial_decay",
    "check_tail_mass",
    "confinement_envelope",
    "conserved_quantities",
    "contour_node_velocities",
    "disk_contour",
    "disk_particles",
    "evolve",
    "gamma_fn",
    "interpolation_lemma_check",
    "kernel_eval",
    "kernel_eval_blob",
    "kernel_table",
    "lemma_constant",
    "make_record",
    "moment",
    "moment_bound_rhs",
    "perp",
    "radial_velocity_probe",
    "random_blob_particles",
    "random_grid_field",
    "recentered",
    "redistribute_nodes",
    "rhs",
    "riesz_constant",
    "riesz_potential_at",
    "set_threads",
    "step_rk4",
    "support_radius",
    "tail_mass",
    "two_disks_contour",
    "two_disks_particles",
    "velocity_contour",
    "velocity_particles",
]
