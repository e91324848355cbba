"""Run-directory serialization: snapshots, diagnostics table, manifest.

A run directory contains::

    manifest.json                 run metadata, config echo, failure info
    diagnostics.csv               one row per snapshot
    snapshots/snapshot_NNNNNN.csv one file per stored field snapshot

CSV files start with a version comment line; consumers should key on the
documented column names, not positions beyond them.  Floats are written
with shortest round-trip formatting so identical runs produce identical
bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DiagnosticsRecord
from .dynamics import SimConfig, Trajectory, TrajectoryEntry
from .errors import ConfigError
from .fields import ContourPatch, Field, ParticleField

DIAGNOSTICS_VERSION = "# alphapatch diagnostics v1"
PARTICLES_VERSION = "# alphapatch particles v1"
CONTOUR_VERSION = "# alphapatch contour v1"
MANIFEST_FORMAT = "alphapatch-run v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def config_to_dict(config: SimConfig) -> dict:
    d = asdict(config)
    d["initial_condition"] = dict(config.initial_condition)
    return d


def config_from_dict(d: dict) -> SimConfig:
    return SimConfig(**d)


def write_json_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def write_diagnostics_csv(path: Path, records: list[DiagnosticsRecord]) -> None:
    lines = [DIAGNOSTICS_VERSION, ",".join(DiagnosticsRecord.CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(v) for v in rec.csv_row()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_diagnostics_csv(path: Path) -> list[DiagnosticsRecord]:
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise ConfigError(f"{path} is not a diagnostics CSV")
    header = lines[1].split(",")
    if tuple(header) != DiagnosticsRecord.CSV_COLUMNS:
        raise ConfigError(f"{path} has unexpected columns {header}")
    records = []
    for line in lines[2:]:
        vals = [float(v) for v in line.split(",")]
        if len(vals) != len(header):
            raise ConfigError(f"{path} has a truncated row")
        records.append(
            DiagnosticsRecord(
                t=vals[0], mass=vals[1], max_theta=vals[2],
                center=np.array(vals[3:5]), inertia=vals[5],
                support_radius=vals[6], moments=np.array(vals[7:13]),
            )
        )
    return records


def write_snapshot_csv(path: Path, field: Field) -> None:
    if isinstance(field, ParticleField):
        lines = [PARTICLES_VERSION, "x1,x2,w"]
        for (x, y), w in zip(field.positions, field.weights):
            lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(w)}")
    elif isinstance(field, ContourPatch):
        lines = [CONTOUR_VERSION, "x1,x2"]
        for x, y in field.nodes:
            lines.append(f"{_fmt(x)},{_fmt(y)}")
    else:
        raise TypeError(f"unsupported field type {type(field).__name__}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_snapshot_csv(path: Path, field_meta: dict) -> Field:
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    if len(lines) < 3:
        raise ConfigError(f"{path} is truncated")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    if lines[0] == PARTICLES_VERSION:
        return ParticleField(
            positions=data[:, :2], weights=data[:, 2],
            eps=field_meta["eps"], max_theta_density=field_meta["max_theta_density"],
        )
    if lines[0] == CONTOUR_VERSION:
        return ContourPatch(
            nodes=data, theta0=field_meta["theta0"],
            target_spacing=field_meta["target_spacing"],
        )
    raise ConfigError(f"{path} has unknown snapshot format {lines[0]!r}")


def field_meta(field: Field) -> dict:
    if isinstance(field, ParticleField):
        return {"eps": field.eps, "max_theta_density": field.max_theta_density}
    return {"theta0": field.theta0, "target_spacing": field.target_spacing}


def write_run(outdir: Path, config: SimConfig, traj: Trajectory,
              started_at: str, finished_at: str, elapsed_seconds: float,
              failure: dict | None = None) -> None:
    """Write a complete run directory; the manifest lands last, atomically."""
    outdir = Path(outdir)
    (outdir / "snapshots").mkdir(parents=True, exist_ok=True)
    snapshot_paths = []
    for i, entry in enumerate(traj.entries):
        rel = f"snapshots/snapshot_{i:06d}.csv"
        write_snapshot_csv(outdir / rel, entry.field)
        snapshot_paths.append(rel)
    write_diagnostics_csv(outdir / "diagnostics.csv", traj.records())
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "config": config_to_dict(config),
        "field_meta": field_meta(traj.entries[0].field) if traj.entries else {},
        "started_at": started_at,
        "finished_at": finished_at,
        "elapsed_seconds": elapsed_seconds,
        "outputs": {"diagnostics": "diagnostics.csv", "snapshots": snapshot_paths},
        "failure": failure,
    }
    write_json_atomic(outdir / "manifest.json", manifest)


def load_run(rundir: Path) -> tuple[SimConfig, Trajectory, dict]:
    """Load a run directory back into (config, trajectory, manifest)."""
    rundir = Path(rundir)
    manifest_path = rundir / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"{rundir} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ConfigError(f"{manifest_path} has unknown format {manifest.get('format')!r}")
    config = config_from_dict(manifest["config"])
    records = read_diagnostics_csv(rundir / manifest["outputs"]["diagnostics"])
    snapshots = manifest["outputs"]["snapshots"]
    if len(records) != len(snapshots):
        raise ConfigError(f"{rundir}: diagnostics rows do not match snapshot count")
    meta = manifest["field_meta"]
    traj = Trajectory(alpha=config.alpha)
    for rec, rel in zip(records, snapshots):
        field = read_snapshot_csv(rundir / rel, meta)
        traj.entries.append(TrajectoryEntry(rec.t, field, rec))
    return config, traj, manifest
