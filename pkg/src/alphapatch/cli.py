"""Command-line entry points tying runs, diagnostics and checks together.

Subcommands::

    simulate      run one configuration, write a run directory
    check         run estimate checks against a stored run directory
    sweep         cartesian alpha x seed sweep with an aggregate table
    kernel-table  dump kernel constants over an alpha grid as CSV
    lemma-check   verify the interpolation inequality on random fields

Exit codes: 0 success, 1 usage or I/O error, 2 numerical or geometry
failure (partial outputs are preserved).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .bounds import (
    check_confinement,
    check_moment_hierarchy,
    check_radial_decay,
    check_tail_mass,
    interpolation_lemma_check,
    lemma_constant,
    random_grid_field,
)
from .dynamics import SimConfig, evolve
from .errors import AlphapatchError, BlowUpError, ConfigError, GeometryError
from .io import config_to_dict, load_run, write_json_atomic, write_run
from .kernel import KernelParams, kernel_table, set_threads

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

CHECK_NAMES = ("confinement", "moments", "tail", "decay")

_CONFIG_KEYS = {
    "alpha", "t_end", "dt", "integrator", "representation",
    "output_stride", "seed", "eps", "initial_condition",
}
_REQUIRED_KEYS = {"alpha", "t_end", "initial_condition"}

_CONFIG_HELP = """\
Run configuration is flat JSON.  Required: alpha (0,1], t_end >= 0,
initial_condition {"type": disk | annulus | two-disks | random-blobs, ...}.
Optional with defaults: dt=0.02, integrator="rk4",
representation="particles", output_stride=10, seed=0, eps=null
(null means half the mean inter-particle spacing).
"""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for numerics.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def parse_config(path) -> SimConfig:
    """Load and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: parse error at line {err.lineno}: {err.msg}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(data)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
    for int_key in ("output_stride", "seed"):
        if int_key in data and not isinstance(data[int_key], int):
            raise ConfigError(f"{path}: {int_key} must be an integer")
    return SimConfig(**data)


def write_config(config: SimConfig, path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_threads(args) -> None:
    n = getattr(args, "threads", None)
    if n is None:
        env = os.environ.get("ALPHAPATCH_THREADS")
        n = int(env) if env else None
    set_threads(n)


def _run_simulation(config: SimConfig, outdir: Path) -> tuple[int, dict | None]:
    started = _now()
    t0 = time.perf_counter()
    failure = None
    try:
        traj = evolve(config)
    except (BlowUpError, GeometryError) as err:
        traj = err.partial
        failure = {
            "type": type(err).__name__,
            "time": err.time,
            "message": str(err),
        }
        print(f"run failed at t = {err.time}: {err}", file=sys.stderr)
    elapsed = time.perf_counter() - t0
    write_run(outdir, config, traj, started, _now(), elapsed, failure)
    return (EXIT_OK if failure is None else EXIT_NUMERICAL), failure


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    _resolve_threads(args)
    code, _ = _run_simulation(config, Path(args.out))
    return code


def cmd_check(args) -> int:
    _resolve_threads(args)
    rundir = Path(args.traj)
    config, traj, _ = load_run(rundir)
    if len(traj) < 2:
        raise ConfigError(f"{rundir}: trajectory has fewer than 2 snapshots")
    wanted = args.checks.split(",") if args.checks else list(CHECK_NAMES)
    unknown = set(wanted) - set(CHECK_NAMES)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}; choose from {CHECK_NAMES}")
    outdir = Path(args.out) if args.out else rundir / "checks"
    outdir.mkdir(parents=True, exist_ok=True)
    params = KernelParams.from_alpha(config.alpha)
    all_pass = True
    for name in wanted:
        try:
            if name == "confinement":
                report = check_confinement(traj, config.alpha)
            elif name == "moments":
                report = check_moment_hierarchy(traj, config.alpha)
            elif name == "tail":
                report = check_tail_mass(traj, config.alpha, args.tail_k)
            else:
                report = check_radial_decay(traj.entries[-1].field, params)
        except ValueError as err:
            raise ConfigError(f"check {name!r}: {err}") from err
        (outdir / f"{report.check_name}.json").write_text(report.to_json(), encoding="utf-8")
        print(f"{report.check_name}: {report.verdict} (margin {report.margin:.4g})")
        all_pass &= report.passed
    return EXIT_OK if all_pass else EXIT_USAGE


def cmd_sweep(args) -> int:
    _resolve_threads(args)
    path = Path(args.config)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read sweep config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: parse error at line {err.lineno}: {err.msg}") from err
    for key in ("alphas", "seeds", "base"):
        if key not in data:
            raise ConfigError(f"{path}: sweep config needs key {key!r}")
    base = dict(data["base"])
    base.pop("alpha", None)
    base.pop("seed", None)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    all_ok = True
    for alpha in data["alphas"]:
        for seed in data["seeds"]:
            run_dir = outdir / f"alpha{alpha}_seed{seed}"
            config = SimConfig(alpha=alpha, seed=seed, **base)
            code, failure = _run_simulation(config, run_dir)
            if code == EXIT_OK:
                _, traj, _ = load_run(run_dir)
                report = check_confinement(traj, alpha)
                (run_dir / "confinement.json").write_text(report.to_json(), encoding="utf-8")
                rows.append((alpha, seed, report.constants["C0_hat"],
                             report.constants["p_hat"], "ok"))
            else:
                rows.append((alpha, seed, math.nan, math.nan, failure["type"]))
                all_ok = False
            print(f"alpha={alpha} seed={seed}: {rows[-1][4]}")
    lines = ["# alphapatch sweep v1", "alpha,seed,C0_hat,p_hat,status"]
    for alpha, seed, c0, p_hat, status in rows:
        lines.append(f"{alpha!r},{seed},{c0!r},{p_hat!r},{status}")
    (outdir / "aggregate.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def cmd_kernel_table(args) -> int:
    if args.alphas:
        alphas = [float(v) for v in args.alphas.split(",")]
    else:
        if args.num < 1:
            raise ConfigError("--num must be >= 1")
        step = (args.max - args.min) / max(args.num - 1, 1)
        alphas = [args.min + i * step for i in range(args.num)]
    lines = ["# alphapatch kernel-table v1", "alpha,riesz_constant,kernel_prefactor"]
    for alpha, c, pref in kernel_table(alphas):
        lines.append(f"{alpha!r},{c!r},{pref!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_lemma_check(args) -> int:
    betas = [float(v) for v in args.betas.split(",")]
    ps = [math.inf if v.strip() in ("inf", "Inf") else float(v) for v in args.ps.split(",")]
    outdir = Path(args.out) if args.out else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for beta in betas:
        for p in ps:
            label = f"beta{beta}_p{'inf' if p == math.inf else p}"
            try:
                lemma_constant(beta, p)
            except ValueError as err:
                print(f"{label}: skipped (outside the inequality's domain: {err})")
                if outdir:
                    write_json_atomic(outdir / f"{label}.json", {
                        "check_name": "interpolation_lemma", "combo": label,
                        "verdict": "skipped", "reason": str(err),
                    })
                continue
            worst = 0.0
            combo_fail = 0
            for i in range(args.fields):
                h = random_grid_field(args.seed + i)
                report = interpolation_lemma_check(
                    h, beta, p, n_points=args.samples, seed=args.seed + 1000 + i
                )
                worst = max(worst, report.margin)
                combo_fail += 0 if report.passed else 1
            status = "pass" if combo_fail == 0 else "fail"
            print(f"{label}: {status} ({args.fields} fields, worst margin {worst:.4g})")
            if outdir:
                write_json_atomic(outdir / f"{label}.json", {
                    "check_name": "interpolation_lemma", "combo": label,
                    "verdict": status, "fields": args.fields,
                    "failures": combo_fail, "worst_margin": worst,
                })
            failures += combo_fail
    return EXIT_OK if failures == 0 else EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="alphapatch",
        description="Alpha-patch flow simulator and estimate-verification harness.",
        epilog=_CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for velocity evaluation "
                            "(default: ALPHAPATCH_THREADS or all cores)")

    p = sub.add_parser("simulate", help="run one configuration")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", required=True, help="output run directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    add_threads(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run estimate checks on a stored run")
    p.add_argument("--traj", required=True, help="run directory produced by simulate")
    p.add_argument("--checks", default=None,
                   help=f"comma-separated subset of {','.join(CHECK_NAMES)} (default: all)")
    p.add_argument("--out", default=None, help="report directory (default: TRAJ/checks)")
    p.add_argument("--tail-k", type=float, default=4.0,
                   help="tail-mass decay exponent to fit against (default 4.0)")
    add_threads(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="cartesian alpha x seed sweep")
    p.add_argument("--config", required=True,
                   help='JSON {"alphas": [...], "seeds": [...], "base": {run config}}')
    p.add_argument("--out", required=True, help="sweep output directory")
    add_threads(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kernel-table", help="dump kernel constants over an alpha grid")
    p.add_argument("--alphas", default=None, help="comma-separated alpha values")
    p.add_argument("--min", type=float, default=0.05, help="grid start (default 0.05)")
    p.add_argument("--max", type=float, default=0.95, help="grid end (default 0.95)")
    p.add_argument("--num", type=int, default=19, help="grid size (default 19)")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_kernel_table)

    p = sub.add_parser("lemma-check", help="verify the interpolation inequality")
    p.add_argument("--fields", type=int, default=50, help="random fields per combo (default 50)")
    p.add_argument("--samples", type=int, default=100,
                   help="evaluation points per field (default 100)")
    p.add_argument("--betas", default="0.5,1.0,1.5", help="comma-separated beta values")
    p.add_argument("--ps", default="inf,4", help="comma-separated p values ('inf' allowed)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--out", default=None, help="report directory (default: none)")
    p.set_defaults(func=cmd_lemma_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (BlowUpError, GeometryError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AlphapatchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
