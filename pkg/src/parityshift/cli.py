"""Command-line front end: kernel dumps, demos, experiments and sweeps.

Subcommands
-----------
kernels     dump x, p(x), g(x), gamma(x), phi(x) and the identity
            residual over a grid to kernels.csv
attack      single-shot coupling demo on one sample
detect      single-shot detector demo on one null sample
experiment  run a harness operation (by preset and/or flags), write
            summary.json (+ trials.jsonl), print per-check pass/fail
sweep       run the phase-transition sweep, write sweep.csv

Configuration layers, later wins: preset -> --config JSON -> flags.
Exit codes: 0 all run-level assertions pass, 1 assertion failure,
2 bad configuration.  Payload files are byte-stable for a fixed seed
and backend; timestamps live only in the run_meta.json sidecar.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import accel, harness
from .attack import CouplingPolicy, couple_perturb
from .detector import DetectorConfig, big_g_value, decide, flip_identity_check
from .harness import ExperimentSpec, SpecValidationError, trial_rng
from .kernels import KernelParams, eval_g, eval_gamma, eval_phi, fp_residual, normal_pdf

__all__ = ["main", "run_cli", "PRESETS"]


class ConfigError(ValueError):
    """Bad command-line or file configuration."""


_OPERATIONS = {
    "coupling_validation": harness.run_coupling_validation,
    "thm1_undetectable": harness.run_thm1_undetectable,
    "thm1_detectable": harness.run_thm1_detectable,
    "thm2_undetectable": harness.run_thm2_undetectable,
    "thm2_detectable": harness.run_thm2_detectable,
}

# Acceptance-grade parameter sets, runnable by name.
PRESETS: dict[str, dict] = {
    "coupling-a1": {
        "operation": "coupling_validation",
        # G(1) ~ 9.16e-3, so the epsilon window must sit below it
        "spec": {"regime": "fixed_a", "a": 1.0, "n": 1000, "trials": 1000, "epsilon": 0.005},
    },
    "coupling-a2": {
        "operation": "coupling_validation",
        "spec": {"regime": "fixed_a", "a": 2.0, "n": 1000, "trials": 1000, "epsilon": 0.05},
    },
    "hoeffding": {
        "operation": "coupling_validation",
        "spec": {"regime": "fixed_a", "a": 2.0, "n": 2000, "trials": 10000, "epsilon": 0.05},
    },
    "thm1-undetectable": {
        "operation": "thm1_undetectable",
        "spec": {"regime": "cube_scaling", "c": 1.5, "n": 10000, "trials": 10000},
    },
    "thm1-detectable": {
        "operation": "thm1_detectable",
        "spec": {"regime": "cube_scaling", "c": 4.0, "n": 10000, "trials": 10000, "lam": 3.0},
    },
    "thm2-undetectable": {
        "operation": "thm2_undetectable",
        "spec": {"regime": "fixed_a", "a": 2.0, "n": 2000, "trials": 10000,
                 "epsilon": 0.05, "lam": 3.0},
    },
    "thm2-detectable": {
        "operation": "thm2_detectable",
        "spec": {"regime": "fixed_a", "a": 2.0, "n": 5000, "trials": 10000,
                 "epsilon": 0.05, "lam": 3.0},
    },
    "sweep-t": {
        "operation": "sweep",
        "spec": {"regime": "fixed_a", "a": 2.0, "n": 2000, "trials": 10000,
                 "epsilon": 0.05, "lam": 3.0},
        "t_offsets": [-0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15],
    },
    "sweep-c": {
        "operation": "sweep",
        "spec": {"regime": "cube_scaling", "c": 1.0, "n": 2000, "trials": 1000},
        "c_values": [1.0 + 0.25 * j for j in range(13)],
    },
}

_SPEC_FIELDS = ("regime", "n", "trials", "master_seed", "a", "c", "t",
                "epsilon", "lam", "alpha", "rel_tol")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _assert_finite(obj, where: str = "payload") -> None:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise AssertionError(f"non-finite value in {where}: {obj!r}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _assert_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _assert_finite(v, f"{where}[{i}]")


def _write_json(path: Path, payload: dict) -> None:
    _assert_finite(payload)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_meta(out_dir: Path, command: str, argv: list[str], seed: int | None,
                wall_time: float) -> None:
    import mpmath
    import scipy

    meta = {
        "command": command,
        "argv": argv,
        "master_seed": seed,
        "backend": accel.BACKEND,
        "wall_time_s": wall_time,
        "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mpmath": mpmath.__version__,
        },
    }
    (out_dir / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _print_checks(checks: dict[str, dict]) -> bool:
    ok = True
    for name, chk in checks.items():
        status = "PASS" if chk["passed"] else "FAIL"
        print(f"[{status}] {name}: observed={chk['observed']:.6g} limit={chk['limit']:.6g}"
              + (f"  ({chk['note']})" if chk.get("note") else ""))
        ok = ok and chk["passed"]
    return ok


def _build_spec(args, preset: dict | None) -> tuple[str, dict, dict]:
    """Layer preset -> config file -> flags into (operation, spec kwargs, extras)."""
    operation = None
    spec: dict = {}
    extras: dict = {}
    if preset is not None:
        operation = preset["operation"]
        spec.update(preset["spec"])
        extras = {k: v for k, v in preset.items() if k not in ("operation", "spec")}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config: no such file: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config: top level must be a JSON object")
        operation = loaded.pop("operation", operation)
        for key in list(loaded):
            if key in _SPEC_FIELDS:
                spec[key] = loaded.pop(key)
            elif key in ("t_offsets", "c_values"):
                extras[key] = loaded.pop(key)
            else:
                raise ConfigError(f"config: unknown field {key!r}")
    flag_map = {
        "a": "a", "c": "c", "n": "n", "t": "t", "epsilon": "epsilon",
        "lam": "lam", "alpha": "alpha", "trials": "trials", "seed": "master_seed",
    }
    for flag, field_name in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            spec[field_name] = value
    if "regime" not in spec:
        if spec.get("c") is not None:
            spec["regime"] = "cube_scaling"
        elif spec.get("a") is not None:
            spec["regime"] = "fixed_a"
    if spec.get("regime") == "fixed_a":
        spec.pop("c", None)
    elif spec.get("regime") == "cube_scaling":
        spec.pop("a", None)
    if getattr(args, "operation", None):
        operation = args.operation
    if operation is None:
        raise ConfigError("no operation: give --preset, --operation or a config file")
    if spec.get("master_seed") is None:
        raise ConfigError("master_seed: stochastic commands need --seed (or master_seed in config)")
    return operation, spec, extras


def _cmd_kernels(args, argv) -> int:
    t0 = time.time()
    params = KernelParams(args.a, rel_tol=args.rel_tol)
    if args.xmax < args.xmin:
        raise ConfigError("xmax: must be >= xmin")
    if max(abs(args.xmin), abs(args.xmax)) > params.x_max - params.a:
        raise ConfigError(
            f"xmin/xmax: grid must stay within |x| <= x_max - a = {params.x_max - params.a:g}"
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    xs = np.arange(args.xmin, args.xmax + 0.5 * args.step, args.step)
    lines = ["x,p,g,gamma,phi,fp_residual"]
    worst = 0.0
    for x in xs:
        x = float(x)
        row = (
            x,
            normal_pdf(x),
            eval_g(x, params).value,
            eval_gamma(x, params),
            eval_phi(x, params),
            fp_residual(x, params),
        )
        worst = max(worst, abs(row[5]))
        if not all(math.isfinite(v) for v in row):
            raise AssertionError(f"non-finite kernel value at x={x!r}")
        lines.append(",".join(_fmt(v) for v in row))
    (out_dir / "kernels.csv").write_text("\n".join(lines) + "\n")
    _write_meta(out_dir, "kernels", argv, None, time.time() - t0)
    ok = worst <= 1e-9
    print(f"[{'PASS' if ok else 'FAIL'}] max_abs_fp_residual: observed={worst:.6g} limit=1e-09")
    print(f"wrote {out_dir / 'kernels.csv'} ({xs.size} rows)")
    return 0 if ok else 1


def _cmd_attack(args, argv) -> int:
    params = KernelParams(args.a, rel_tol=args.rel_tol)
    rng = trial_rng(args.seed, 0)
    x = rng.standard_normal(args.n)
    theta, x_post = couple_perturb(x, CouplingPolicy(params, rng))
    a_pre = accel.parity_labels_and_sum(x, args.a)[1] / args.n
    a_post = accel.parity_labels_and_sum(x_post, args.a)[1] / args.n
    resid = flip_identity_check(x, theta, args.a)
    print(f"n={args.n} a={args.a} seed={args.seed}")
    print(f"sparsity_ratio={theta.sparsity_ratio():.6g} zero_count={theta.zero_count}")
    print(f"A_pre={a_pre:.6g} A_post={a_post:.6g} flip_identity_residual={resid:.6g}")
    ok = resid == 0.0
    print(f"[{'PASS' if ok else 'FAIL'}] flip_identity_zero: observed={resid:.6g} limit=0")
    return 0 if ok else 1


def _cmd_detect(args, argv) -> int:
    config = DetectorConfig(a=args.a, lam=args.lam, variant=args.variant)
    rng = trial_rng(args.seed, 0)
    x = rng.standard_normal(args.n)
    result = decide(x, config)
    print(f"n={args.n} a={args.a} lambda={args.lam} variant={args.variant} seed={args.seed}")
    print(f"A={result.statistic_a:.6g} G(a)={big_g_value(args.a):.17g}")
    print(f"accept_h0={result.accept_h0}")
    return 0


def _cmd_experiment(args, argv) -> int:
    t0 = time.time()
    preset = None
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {args.preset!r} "
                              f"(choose from {sorted(PRESETS)})")
        preset = PRESETS[args.preset]
    operation, spec_kwargs, _ = _build_spec(args, preset)
    if operation == "sweep":
        raise ConfigError("operation: sweep presets run under the `sweep` subcommand")
    if operation not in _OPERATIONS:
        raise ConfigError(f"operation: unknown operation {operation!r}")
    formats = set((args.format or "json").split(","))
    if not formats <= {"csv", "json", "jsonl"}:
        raise ConfigError(f"format: must be a subset of csv,json,jsonl, got {args.format!r}")
    try:
        spec = ExperimentSpec(**spec_kwargs)
    except TypeError as exc:
        raise ConfigError(f"spec: {exc}") from exc

    record = "jsonl" in formats
    summary = _OPERATIONS[operation](spec, record_trials=record)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "summary.json", summary.to_dict())
    if record:
        with (out_dir / "trials.jsonl").open("w") as fh:
            for rec in summary.trials or []:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
    _write_meta(out_dir, f"experiment:{operation}", argv, spec.master_seed, time.time() - t0)

    ok = _print_checks(summary.checks)
    print(f"wrote {out_dir / 'summary.json'}; passed={summary.passed}")
    return 0 if ok else 1


def _sweep_csv_lines(rows: list[dict]) -> list[str]:
    flat_rows = []
    for row in rows:
        flat = {}
        for key, value in row.items():
            if isinstance(value, dict):  # flatten rate entries
                for sub, sv in value.items():
                    flat[f"{key}_{sub}"] = sv
            else:
                flat[key] = value
        flat_rows.append(flat)
    header = list(flat_rows[0])
    lines = [",".join(header)]
    for flat in flat_rows:
        cells = []
        for key in header:
            v = flat[key]
            cells.append(_fmt(v) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return lines


def _cmd_sweep(args, argv) -> int:
    t0 = time.time()
    preset = None
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {args.preset!r} "
                              f"(choose from {sorted(PRESETS)})")
        preset = PRESETS[args.preset]
    _, spec_kwargs, extras = _build_spec(args, preset)
    try:
        spec = ExperimentSpec(**spec_kwargs)
    except TypeError as exc:
        raise ConfigError(f"spec: {exc}") from exc

    rows = harness.sweep_phase_transition(
        spec, t_offsets=extras.get("t_offsets"), c_values=extras.get("c_values")
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    checks: dict[str, dict] = {}
    if rows and rows[0]["kind"] == "t":
        counts = [row["attacker_success"]["count"] for row in rows]
        monotone = all(c1 <= c2 for c1, c2 in zip(counts, counts[1:]))
        checks["success_monotone_in_t"] = harness._check(
            monotone, 0 if monotone else 1, 0,
            "success counts nondecreasing across the t grid (shared substreams)",
        )

    payload = {
        "operation": "sweep",
        "spec": asdict(spec),
        "backend": accel.BACKEND,
        "rows": rows,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }
    _write_json(out_dir / "summary.json", payload)
    (out_dir / "sweep.csv").write_text("\n".join(_sweep_csv_lines(rows)) + "\n")
    _write_meta(out_dir, "sweep", argv, spec.master_seed, time.time() - t0)

    ok = _print_checks(checks) if checks else True
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} cells); passed={payload['passed']}")
    return 0 if ok else 1


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parityshift",
        description="Wrapped-Gaussian coupling attacks and bin-parity detection experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pk = sub.add_parser("kernels", help="dump kernel tables to CSV")
    pk.add_argument("--a", type=float, required=True)
    pk.add_argument("--xmin", type=float, default=-4.0)
    pk.add_argument("--xmax", type=float, default=4.0)
    pk.add_argument("--step", type=float, default=0.01)
    pk.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-12)
    pk.add_argument("--out", default=".")

    pa = sub.add_parser("attack", help="single-shot coupling demo")
    pa.add_argument("--a", type=float, required=True)
    pa.add_argument("--n", type=int, default=1000)
    pa.add_argument("--seed", type=int, required=True)
    pa.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-12)

    pd = sub.add_parser("detect", help="single-shot detector demo")
    pd.add_argument("--a", type=float, required=True)
    pd.add_argument("--n", type=int, default=1000)
    pd.add_argument("--seed", type=int, required=True)
    pd.add_argument("--lambda", dest="lam", type=float, default=3.0)
    pd.add_argument("--variant", choices=("thresholded", "zero"), default="thresholded")

    def add_spec_flags(p):
        p.add_argument("--preset", default=None)
        p.add_argument("--config", default=None, help="JSON file mirroring ExperimentSpec")
        p.add_argument("--a", type=float, default=None)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--t", type=float, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".")

    pe = sub.add_parser("experiment", help="run one harness operation")
    add_spec_flags(pe)
    pe.add_argument("--operation", choices=sorted(_OPERATIONS), default=None)
    pe.add_argument("--format", default="json", help="comma subset of csv,json,jsonl")

    ps = sub.add_parser("sweep", help="phase-transition sweep")
    add_spec_flags(ps)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _parser()
    args = parser.parse_args(argv)
    handlers = {
        "kernels": _cmd_kernels,
        "attack": _cmd_attack,
        "detect": _cmd_detect,
        "experiment": _cmd_experiment,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args, argv)
    except (ConfigError, SpecValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
