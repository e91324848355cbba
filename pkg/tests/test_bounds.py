"""Estimate checkers: envelope fits, moment hierarchy, decay, the lemma."""

import math

import numpy as np
import pytest

import alphapatch as ap

ENVELOPE_EXAMPLE = 6.0420619177903307       # 4 + (10 ln 12)^(1/4.5)
MOMENT_RHS_EXAMPLE = 20676.610431019079     # 2 (1 + 4*0.5*3^1.5*2)^3


def params(alpha=0.5):
    return ap.KernelParams.from_alpha(alpha)


def synthetic_trajectory(scale_fn, times, alpha=0.5, n_particles=300, seed=0,
                         eps=1e-12):
    """Trajectory whose field at time t is the seed field scaled by scale_fn(t)."""
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n_particles, 2)) * 0.5
    w = rng.random(n_particles) + 0.2
    p = params(alpha)
    traj = ap.Trajectory(alpha=alpha)
    for t in times:
        f = ap.ParticleField(pos * scale_fn(t), w, eps, 1.0)
        traj.entries.append(ap.TrajectoryEntry(t, f, ap.make_record(f, p, t)))
    return traj


# ---------------------------------------------------------------------------
# Envelope function
# ---------------------------------------------------------------------------

def test_envelope_at_time_zero():
    assert ap.confinement_envelope(0.0, 2.0, 3.0, 0.5) == 8.0


def test_envelope_with_zero_constant():
    for t in (0.0, 1.0, 100.0):
        assert ap.confinement_envelope(t, 1.5, 0.0, 0.3) == 6.0


def test_envelope_direct_evaluation():
    assert ap.confinement_envelope(10.0, 1.0, 1.0, 0.5) == pytest.approx(
        ENVELOPE_EXAMPLE, rel=1e-12
    )


def test_envelope_monotonicity_on_random_triples():
    rng = np.random.default_rng(21)
    for _ in range(50):
        t = rng.uniform(0.1, 50.0)
        r0 = rng.uniform(0.2, 5.0)
        c0 = rng.uniform(0.0, 4.0)
        a = rng.uniform(0.05, 0.95)
        base = ap.confinement_envelope(t, r0, c0, a)
        assert ap.confinement_envelope(t * 1.3, r0, c0, a) >= base
        assert ap.confinement_envelope(t, r0 * 1.3, c0, a) > base
        assert ap.confinement_envelope(t, r0, c0 + 0.5, a) > base


def test_envelope_input_validation():
    with pytest.raises(ValueError):
        ap.confinement_envelope(1.0, -1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        ap.confinement_envelope(-1.0, 1.0, 1.0, 0.5)


# ---------------------------------------------------------------------------
# Confinement fit
# ---------------------------------------------------------------------------

def test_check_confinement_steady_field():
    times = np.linspace(0.0, 10.0, 12)
    traj = synthetic_trajectory(lambda t: 1.0, times)
    report = ap.check_confinement(traj, 0.5)
    assert report.passed
    assert report.constants["C0_hat"] == 0.0
    assert report.margin < 1.0
    assert any("trivially" in n for n in report.notes)


def test_check_confinement_two_corotating_particles():
    p = params(0.5)
    f = ap.ParticleField(
        np.array([[0.5, 0.0], [-0.5, 0.0]]), np.ones(2), 1e-6, 1.0
    )
    traj = ap.Trajectory(alpha=0.5)
    t, dt = 0.0, 0.2
    g = f
    traj.entries.append(ap.TrajectoryEntry(0.0, g, ap.make_record(g, p, 0.0)))
    for k in range(1, 12):
        g = ap.step_rk4(g, dt, p)
        t = k * dt
        traj.entries.append(ap.TrajectoryEntry(t, g, ap.make_record(g, p, t)))
    report = ap.check_confinement(traj, 0.5)
    assert report.passed
    assert report.constants["C0_hat"] == pytest.approx(0.0, abs=1e-10)


def test_check_confinement_growing_support_is_fit_and_stable():
    # support follows the envelope shape exactly for t > 0, so the fitted
    # constant is the same on every snapshot and the half-trajectory refit
    # agrees to rounding
    alpha = 0.5
    times = np.linspace(0.0, 20.0, 21)

    def scale(t):
        return 1.0 if t == 0.0 else 4.0 + 2.0 * (t * np.log(2.0 + t)) ** (1.0 / 4.5)

    traj = synthetic_trajectory(scale, times, alpha=alpha)
    r0 = traj.records()[0].support_radius
    report = ap.check_confinement(traj, alpha)
    assert report.passed
    assert report.constants["C0_hat"] > 0.0
    assert report.constants["C0_hat"] == pytest.approx(2.0 * r0, rel=1e-9)
    assert report.margin <= 1.0 + 1e-12
    for rec in traj.records():
        env = ap.confinement_envelope(rec.t, r0, report.constants["C0_hat"], alpha)
        assert rec.support_radius <= env * (1.0 + 1e-12)


def test_check_confinement_rotation_reflection_invariance():
    alpha = 0.5
    times = np.linspace(0.0, 10.0, 11)
    traj = synthetic_trajectory(lambda t: 1.0 + 0.3 * t, times)
    base = ap.check_confinement(traj, alpha).constants["C0_hat"]
    ang = 1.234
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    p = params(alpha)
    rotated = ap.Trajectory(alpha=alpha)
    mirrored = ap.Trajectory(alpha=alpha)
    for e in traj.entries:
        fr = e.field.with_positions(e.field.positions @ rot.T)
        fm = e.field.with_positions(e.field.positions * np.array([1.0, -1.0]))
        rotated.entries.append(ap.TrajectoryEntry(e.time, fr, ap.make_record(fr, p, e.time)))
        mirrored.entries.append(ap.TrajectoryEntry(e.time, fm, ap.make_record(fm, p, e.time)))
    assert ap.check_confinement(rotated, alpha).constants["C0_hat"] == pytest.approx(
        base, rel=1e-12
    )
    assert ap.check_confinement(mirrored, alpha).constants["C0_hat"] == pytest.approx(
        base, rel=1e-12
    )


def test_check_confinement_preconditions():
    times = np.linspace(0.0, 1.0, 5)
    traj = synthetic_trajectory(lambda t: 1.0, times)
    with pytest.raises(ValueError):
        ap.check_confinement(traj, 0.5)  # fewer than 10 snapshots


# ---------------------------------------------------------------------------
# Moment hierarchy
# ---------------------------------------------------------------------------

def test_moment_bound_rhs_at_time_zero():
    for n in (1, 2, 5):
        assert ap.moment_bound_rhs(n, 0.0, 2.0, 1.5, 1.0, 3.0, 0.5) == pytest.approx(
            2.0 * 1.5 ** (4.5 * n), rel=1e-12
        )


def test_moment_bound_rhs_simple_case():
    assert ap.moment_bound_rhs(1, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(2.0)


def test_moment_bound_rhs_direct_evaluation():
    assert ap.moment_bound_rhs(3, 2.0, 2.0, 1.0, 0.5, 4.0, 0.5) == pytest.approx(
        MOMENT_RHS_EXAMPLE, rel=1e-12
    )


def test_moment_bound_rhs_overflow():
    with pytest.raises(OverflowError):
        ap.moment_bound_rhs(6, 1e30, 1.0, 10.0, 1.0, 1e30, 0.5)
    with pytest.raises(ValueError):
        ap.moment_bound_rhs(0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5)


def test_check_moment_hierarchy_initial_snapshot_only():
    traj = synthetic_trajectory(lambda t: 1.0, [0.0])
    report = ap.check_moment_hierarchy(traj, 0.5)
    assert report.passed
    assert report.constants["C0_hat"] == 0.0


def test_check_moment_hierarchy_steady_field():
    times = np.linspace(0.0, 10.0, 12)
    traj = synthetic_trajectory(lambda t: 1.0, times)
    report = ap.check_moment_hierarchy(traj, 0.5)
    assert report.passed
    assert report.constants["C0_hat"] == 0.0
    assert report.margin <= 1.0


def test_check_moment_hierarchy_growing_field_margin_and_domination():
    alpha = 0.5
    times = np.linspace(0.0, 10.0, 11)
    traj = synthetic_trajectory(lambda t: 1.0 + 0.5 * t, times, alpha=alpha)
    report = ap.check_moment_hierarchy(traj, alpha)
    assert report.margin <= 1.0 + 1e-12
    c0 = report.constants["C0_hat"]
    assert c0 > 0.0
    first = traj.records()[0]
    # the fitted bound at n = 1 dominates the measured first moment everywhere
    for rec in traj.records():
        if rec.t == 0.0:
            continue
        rhs = ap.moment_bound_rhs(1, rec.t, first.mass, first.support_radius,
                                  first.inertia, c0, alpha)
        assert rec.moments[0] <= rhs * (1.0 + 1e-12)


def test_check_moment_hierarchy_missing_moments():
    traj = synthetic_trajectory(lambda t: 1.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        ap.check_moment_hierarchy(traj, 0.5, n_max=7)


# ---------------------------------------------------------------------------
# Tail mass
# ---------------------------------------------------------------------------

def test_check_tail_mass_confined_run_is_vacuous():
    times = np.linspace(0.0, 10.0, 12)
    traj = synthetic_trajectory(lambda t: 1.0, times)
    report = ap.check_tail_mass(traj, 0.5, k=4.0)
    assert report.passed
    assert report.constants["C_hat"] == 0.0
    assert any("zero" in n for n in report.notes)


def test_check_tail_mass_requires_positive_exponent():
    times = np.linspace(0.0, 10.0, 12)
    traj = synthetic_trajectory(lambda t: 1.0, times)
    with pytest.raises(ValueError):
        ap.check_tail_mass(traj, 0.5, k=0.0)


# ---------------------------------------------------------------------------
# Radial decay
# ---------------------------------------------------------------------------

def test_check_radial_decay_symmetric_field_vacuous():
    p = params(0.5)
    n = 64
    t = 2.0 * np.pi * np.arange(n) / n
    f = ap.ParticleField(np.column_stack([np.cos(t), np.sin(t)]), np.ones(n), 0.05, 1.0)
    report = ap.check_radial_decay(f, p)
    assert report.passed
    assert any("vacuous" in note for note in report.notes)


def test_check_radial_decay_single_particle_vacuous():
    p = params(0.5)
    f = ap.ParticleField(np.array([[2.0, 1.0]]), np.array([1.5]), 1e-6, 1.0)
    report = ap.check_radial_decay(f, p)
    assert report.passed
    assert any("vacuous" in note for note in report.notes)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_check_radial_decay_two_disks(alpha):
    p = params(alpha)
    f = ap.two_disks_particles(radius1=1.0, radius2=0.5,
                               center1=(-1.5, 0.0), center2=(1.5, 0.5),
                               theta1=1.0, theta2=2.0, n_particles=1500)
    report = ap.check_radial_decay(f, p)
    assert report.passed
    assert report.constants["slope_hat"] <= -(3.0 + alpha) + 0.2


# ---------------------------------------------------------------------------
# Interpolation inequality
# ---------------------------------------------------------------------------

def test_lemma_constant_values():
    assert ap.lemma_constant(0.5, math.inf) == pytest.approx(1.0 + 2.0 * math.pi / 1.5)
    assert ap.lemma_constant(1.0, 4.0) == pytest.approx(
        1.0 + (2.0 * math.pi / (2.0 - 4.0 / 3.0)) ** 0.75
    )
    with pytest.raises(ValueError):
        ap.lemma_constant(2.5, math.inf)
    with pytest.raises(ValueError):
        ap.lemma_constant(1.5, 4.0)  # needs p > 2/(2-beta) = 4
    with pytest.raises(ValueError):
        ap.lemma_constant(1.0, 2.0)


def disk_indicator_grid(n=128, radius=1.0, extent=2.4):
    cell = extent / n
    coords = -extent / 2.0 + (np.arange(n) + 0.5) * cell
    gx, gy = np.meshgrid(coords, coords, indexing="xy")
    values = (gx ** 2 + gy ** 2 <= radius ** 2).astype(float)
    return ap.GridField(values, origin=(-extent / 2.0, -extent / 2.0), cell=cell)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5])
def test_lemma_disk_indicator_closed_form(beta):
    h = disk_indicator_grid()
    x = np.zeros(2)
    lhs = ap.riesz_potential_at(h, x, beta)
    analytic = 2.0 * math.pi / (2.0 - beta)  # integral of |y|^-beta over the unit disk
    assert lhs == pytest.approx(analytic, rel=2e-2)
    rhs = ap.lemma_constant(beta, math.inf) * h.norm_l1() ** (1 - beta / 2.0)
    assert lhs <= rhs


def test_lemma_zero_field():
    h = ap.GridField(np.zeros((16, 16)), cell=1.0 / 16.0)
    report = ap.interpolation_lemma_check(h, 1.0, math.inf, n_points=10)
    assert report.passed
    assert report.constants["max_lhs"] == 0.0


def test_lemma_single_cell():
    values = np.zeros((32, 32))
    values[10, 20] = 3.0
    h = ap.GridField(values, cell=1.0 / 32.0)
    report = ap.interpolation_lemma_check(h, 0.5, math.inf, n_points=100, seed=3)
    assert report.passed
    # direct evaluation from an exterior point
    x = np.array([2.0, 2.0])
    cell_center = np.array([(20 + 0.5) / 32.0, (10 + 0.5) / 32.0])
    d = np.linalg.norm(x - cell_center)
    expected = 3.0 * (1.0 / 32.0) ** 2 / d ** 0.5
    assert ap.riesz_potential_at(h, x, 0.5) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("beta,p", [(0.5, math.inf), (1.0, math.inf), (1.5, math.inf),
                                    (0.5, 4.0), (1.0, 4.0)])
def test_lemma_random_fields(beta, p):
    for seed in range(5):
        h = ap.random_grid_field(seed)
        report = ap.interpolation_lemma_check(h, beta, p, n_points=50, seed=seed + 100)
        assert report.passed, (beta, p, seed, report.margin)


def test_lemma_rejects_out_of_domain_combo():
    h = ap.random_grid_field(0)
    with pytest.raises(ValueError):
        ap.interpolation_lemma_check(h, 1.5, 4.0)


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def test_bound_report_json_round_trip():
    report = ap.BoundReport(
        check_name="demo", constants={"a": 1.5}, passed=True,
        margin=0.7, samples=12, notes=["note"],
    )
    text = report.to_json()
    back = ap.BoundReport.from_json(text)
    assert back == report
    assert back.verdict == "pass"
