"""Configuration parsing, run directories, and the command-line surface."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

import alphapatch as ap
from alphapatch.cli import main, parse_config, write_config
from alphapatch.io import load_run


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def minimal_config(**overrides):
    cfg = {
        "alpha": 0.5,
        "t_end": 0.2,
        "dt": 0.02,
        "output_stride": 1,
        "initial_condition": {"type": "disk", "radius": 1.0, "n_particles": 150},
    }
    cfg.update(overrides)
    return cfg


# ---------------------------------------------------------------------------
# parse_config
# ---------------------------------------------------------------------------

def test_parse_config_fills_defaults(tmp_path):
    path = write_json(tmp_path / "run.json", {
        "alpha": 0.5, "t_end": 10.0,
        "initial_condition": {"type": "disk", "radius": 1.0},
    })
    cfg = parse_config(path)
    assert cfg.dt == 0.02
    assert cfg.integrator == "rk4"
    assert cfg.representation == "particles"
    assert cfg.output_stride == 10
    assert cfg.seed == 0
    assert cfg.eps is None


def test_parse_config_rejects_bad_alpha(tmp_path):
    path = write_json(tmp_path / "run.json", minimal_config(alpha=1.5))
    with pytest.raises(ap.ConfigError, match="alpha outside"):
        parse_config(path)


def test_parse_config_rejects_negative_dt(tmp_path):
    path = write_json(tmp_path / "run.json", minimal_config(dt=-0.1))
    with pytest.raises(ap.ConfigError, match="dt"):
        parse_config(path)


def test_parse_config_rejects_unknown_keys(tmp_path):
    path = write_json(tmp_path / "run.json", minimal_config(viscosity=0.1))
    with pytest.raises(ap.ConfigError, match="viscosity"):
        parse_config(path)


def test_parse_config_reports_parse_errors_with_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n "alpha": 0.5,\n oops\n}', encoding="utf-8")
    with pytest.raises(ap.ConfigError, match="line 3"):
        parse_config(path)


def test_config_round_trip(tmp_path):
    cfg = ap.SimConfig(**minimal_config(seed=3, eps=0.01))
    path = tmp_path / "echo.json"
    write_config(cfg, path)
    assert parse_config(path) == cfg


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_writes_run_directory(tmp_path):
    cfg_path = write_json(tmp_path / "run.json", minimal_config())
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failure"] is None
    for rel in manifest["outputs"]["snapshots"] + [manifest["outputs"]["diagnostics"]]:
        assert (out / rel).exists()
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("#")
    times = [float(line.split(",")[0]) for line in diag[2:]]
    assert times == sorted(times)
    assert times[0] == 0.0


def test_simulate_rerun_is_byte_identical(tmp_path):
    cfg_path = write_json(tmp_path / "run.json", minimal_config(
        initial_condition={"type": "random-blobs", "radius": 1.5, "n_blobs": 3,
                           "n_particles": 200},
        seed=11,
    ))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out2)]) == 0
    assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()
    for rel in json.loads((out1 / "manifest.json").read_text())["outputs"]["snapshots"]:
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()


def test_simulate_seed_flag_overrides(tmp_path):
    cfg_path = write_json(tmp_path / "run.json", minimal_config(
        initial_condition={"type": "random-blobs", "radius": 1.5, "n_blobs": 3,
                           "n_particles": 200},
        seed=11,
    ))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out2),
                 "--seed", "12"]) == 0
    d1 = (out1 / "diagnostics.csv").read_bytes()
    d2 = (out2 / "diagnostics.csv").read_bytes()
    assert d1 != d2
    assert json.loads((out2 / "manifest.json").read_text())["config"]["seed"] == 12


def test_simulate_contour_collision_exits_2_with_partial_outputs(tmp_path):
    cfg_path = write_json(tmp_path / "run.json", {
        "alpha": 0.8,
        "t_end": 50.0,
        "dt": 0.05,
        "output_stride": 10,
        "representation": "contour",
        "initial_condition": {"type": "two-disks", "radius1": 1.0, "radius2": 1.0,
                              "center1": [-0.990, 0.0], "center2": [0.990, 0.0],
                              "n_nodes": 128},
    })
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(out)])
    assert code == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failure"]["type"] == "GeometryError"
    assert manifest["failure"]["time"] > 0.0
    assert (out / "diagnostics.csv").exists()
    assert len(manifest["outputs"]["snapshots"]) >= 1


def test_simulate_missing_config_exits_1(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "out")]) == 1


def test_usage_error_exits_1(capsys):
    assert main(["simulate"]) == 1  # missing required flags
    assert main(["frobnicate"]) == 1


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def steady_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("steady")
    cfg_path = write_json(tmp / "run.json", minimal_config(
        t_end=1.0, dt=0.05, output_stride=1,
    ))
    out = tmp / "out"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    return out


def test_check_all_pass_on_steady_disk(steady_run):
    code = main(["check", "--traj", str(steady_run)])
    assert code == 0
    checks = steady_run / "checks"
    for name in ("confinement", "moment_hierarchy", "tail_mass", "radial_decay"):
        report = ap.BoundReport.from_json((checks / f"{name}.json").read_text())
        assert report.passed, name


def test_check_subset_only_emits_selected(steady_run, tmp_path):
    out = tmp_path / "reports"
    code = main(["check", "--traj", str(steady_run), "--checks", "confinement",
                 "--out", str(out)])
    assert code == 0
    assert (out / "confinement.json").exists()
    assert not (out / "moment_hierarchy.json").exists()


def test_check_unknown_name_exits_1(steady_run):
    assert main(["check", "--traj", str(steady_run), "--checks", "sorcery"]) == 1


def test_check_truncated_diagnostics_exits_1(steady_run, tmp_path):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(steady_run, broken)
    diag = broken / "diagnostics.csv"
    lines = diag.read_text().splitlines()
    lines[-1] = lines[-1].rsplit(",", 3)[0]
    diag.write_text("\n".join(lines) + "\n")
    assert main(["check", "--traj", str(broken)]) == 1


def test_check_missing_run_exits_1(tmp_path):
    assert main(["check", "--traj", str(tmp_path / "nope")]) == 1


def test_load_run_round_trips_fields(steady_run):
    config, traj, manifest = load_run(steady_run)
    assert config.alpha == 0.5
    assert len(traj) == len(manifest["outputs"]["snapshots"])
    f = traj.entries[0].field
    assert isinstance(f, ap.ParticleField)
    rec = traj.entries[0].record
    mass, _, _, _ = ap.conserved_quantities(f)
    assert mass == pytest.approx(rec.mass, rel=1e-12)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_1x1_matches_simulate_plus_check(tmp_path):
    sweep_cfg = write_json(tmp_path / "sweep.json", {
        "alphas": [0.5],
        "seeds": [3],
        "base": minimal_config(t_end=1.0, dt=0.05, output_stride=1,
                               initial_condition={"type": "random-blobs",
                                                  "radius": 1.5, "n_blobs": 3,
                                                  "n_particles": 150}),
    })
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(sweep_cfg), "--out", str(out)]) == 0
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert agg[1] == "alpha,seed,C0_hat,p_hat,status"
    assert len(agg) == 3
    run_dir = out / "alpha0.5_seed3"
    assert (run_dir / "manifest.json").exists()
    assert (run_dir / "confinement.json").exists()
    # equivalent to simulate + check on the same configuration
    solo_cfg = write_json(tmp_path / "solo.json", minimal_config(
        t_end=1.0, dt=0.05, output_stride=1, seed=3,
        initial_condition={"type": "random-blobs", "radius": 1.5, "n_blobs": 3,
                           "n_particles": 150}))
    solo = tmp_path / "solo"
    assert main(["simulate", "--config", str(solo_cfg), "--out", str(solo)]) == 0
    assert (solo / "diagnostics.csv").read_bytes() == (run_dir / "diagnostics.csv").read_bytes()


def test_sweep_grid_shape_and_failure_handling(tmp_path):
    sweep_cfg = write_json(tmp_path / "sweep.json", {
        "alphas": [0.3, 0.6],
        "seeds": [1, 2, 3],
        "base": minimal_config(t_end=0.1, dt=0.05, output_stride=1),
    })
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(sweep_cfg), "--out", str(out)]) == 0
    rows = (out / "aggregate.csv").read_text().splitlines()[2:]
    assert len(rows) == 6


# ---------------------------------------------------------------------------
# kernel-table
# ---------------------------------------------------------------------------

def test_kernel_table_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["kernel-table", "--alphas", "0.5,1.0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "alpha,riesz_constant,kernel_prefactor"
    row_half = lines[2].split(",")
    assert float(row_half[1]) == pytest.approx(0.33296793550170026, rel=1e-10)
    row_one = lines[3].split(",")
    assert float(row_one[1]) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-12)
    # single-value grid: one data row plus headers
    assert main(["kernel-table", "--alphas", "0.7"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 3


def test_kernel_table_stdout_grid(capsys):
    assert main(["kernel-table", "--min", "0.1", "--max", "0.9", "--num", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 + 5


# ---------------------------------------------------------------------------
# lemma-check
# ---------------------------------------------------------------------------

def test_lemma_check_cli_small(tmp_path, capsys):
    out = tmp_path / "lemma"
    code = main(["lemma-check", "--fields", "2", "--samples", "20",
                 "--betas", "0.5,1.5", "--ps", "inf,4", "--seed", "5",
                 "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "skipped" in printed  # (beta=1.5, p=4) is outside the domain
    report = json.loads((out / "beta0.5_pinf.json").read_text())
    assert report["verdict"] == "pass"
    skipped = json.loads((out / "beta1.5_p4.0.json").read_text())
    assert skipped["verdict"] == "skipped"


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg_path = write_json(tmp_path / "run.json", minimal_config(t_end=0.04))
    monkeypatch.setenv("ALPHAPATCH_THREADS", "1")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
