"""Command line entry point and file output.

Subcommands: run, sweep, converge, growth, calibrate, check.  Exit codes:
0 success, 1 invalid configuration, 2 solver or analysis failure, 3 a
check or growth gate failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import COMMANDS, ConfigError, RunManifest, parse_config
from .diagnostics import (
    BracketError,
    RefinementError,
    calibrate_a0,
    fit_power_law,
    richardson_orders,
    stationary_residual,
)
from .model import InvalidSpecError
from .solver import SolveReport, StepRejected, front_speed, run

__all__ = ["main", "emit_report"]

CSV_HEADER = "t,s,s_t,u0,uS,mass,mass_residual,psi"
SWEEPABLE = ("a0", "beta", "gamma", "s0")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3


def _fmt(x) -> str:
    # 17 significant decimal digits round-trip binary doubles exactly
    return format(float(x), ".17g")


def emit_report(report: SolveReport, out_dir: Path, plot: bool = False) -> None:
    """Write timeseries.csv, meta.txt and, when asked, front.svg."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = zip(
        report.times,
        report.fronts,
        report.front_speeds,
        report.u_at_0,
        report.u_at_1,
        report.masses,
        report.mass_residuals,
        report.energies,
    )
    with open(out_dir / "timeseries.csv", "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")

    meta = report.meta
    spec = meta["spec"]
    grid = meta["grid"]
    config = meta["config"]
    lines = ["[parameters]"]
    for name in ("a0", "beta", "gamma", "s0", "b_lower", "b_upper", "b_infinity"):
        lines.append(f"{name} = {getattr(spec, name)}")
    lines.append(f"b = {spec.b}")
    lines.append(f"u0 = {spec.u0}")
    lines.append("")
    lines.append("[grid]")
    lines.append(f"n_cells = {grid.n_cells}")
    lines.append(f"dt = {grid.dt}")
    lines.append(f"t_end = {grid.t_end}")
    lines.append("")
    lines.append("[solver]")
    lines.append(f"advection = {config.advection}")
    lines.append(f"picard = {config.picard}")
    lines.append(f"picard_max_iters = {config.picard_max_iters}")
    lines.append(f"picard_tol = {config.picard_tol}")
    lines.append(f"bounds_tol = {config.bounds_tol}")
    lines.append("")
    lines.append("[run]")
    lines.append(f"steps = {meta['n_steps']}")
    lines.append(f"record_stride = {meta['record_stride']}")
    lines.append(f"wall_time_s = {meta['wall_time']:.3f}")
    pic = meta["picard"]
    lines.append(f"picard_max_iters_used = {pic['max_iters_used']}")
    lines.append(f"picard_max_ratio = {pic['max_ratio']}")
    lines.append("")
    lines.append("[invariants]")
    mono = bool(np.all(np.diff(report.fronts) >= 0.0))
    cap = spec.concentration_cap()
    envelope = spec.s0 + spec.a0 * cap * report.times if np.isfinite(cap) else None
    margin = float(np.max(report.fronts - envelope)) if envelope is not None else float("nan")
    lines.append(f"front_nondecreasing = {mono}")
    lines.append(f"growth_bound_margin = {margin:.3e}")
    lines.append(f"max_bound_violation = {float(np.max(report.bound_violations)):.3e}")
    lines.append(f"final_front = {report.final_state.s!r}")
    for note in meta.get("notes", ()):
        lines.append(f"note = {note}")
    (out_dir / "meta.txt").write_text("\n".join(lines) + "\n")

    if plot:
        _write_front_plot(report, out_dir / "front.svg")


def _write_front_plot(report: SolveReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.times, report.fronts, lw=1.5)
    ax.set_xlabel("t")
    ax.set_ylabel("front position s(t)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _load_manifest(args) -> RunManifest:
    text = Path(args.config).read_text()
    out = getattr(args, "out", None)
    return parse_config(text, command=args.command, output_dir=out)


def _cmd_run(manifest: RunManifest) -> int:
    report = run(manifest.spec, manifest.grid, manifest.solver,
                 record_stride=manifest.output_stride)
    report.meta["notes"] = manifest.warnings
    emit_report(report, manifest.output_dir, plot=manifest.plot)
    print(f"run complete: {report.meta['n_steps']} steps,"
          f" s({manifest.grid.t_end:g}) = {report.final_state.s:.6g}")
    return EXIT_OK


def _sweep_one(payload):
    manifest, name, value, token = payload
    spec = dataclasses.replace(manifest.spec, **{name: value})
    report = run(spec, manifest.grid, manifest.solver,
                 record_stride=manifest.output_stride)
    sub = manifest.output_dir / f"{name}={token}"
    emit_report(report, sub, plot=manifest.plot)
    return token, float(report.final_state.s)


def _cmd_sweep(manifest: RunManifest, param: str, workers: int) -> int:
    if "=" not in param:
        print(f"--param must look like a0=0.5,1,2, got {param!r}", file=sys.stderr)
        return EXIT_CONFIG
    name, _, rest = param.partition("=")
    name = name.strip()
    if name not in SWEEPABLE:
        print(f"sweep parameter must be one of {SWEEPABLE}, got {name!r}",
              file=sys.stderr)
        return EXIT_CONFIG
    tokens = [tok.strip() for tok in rest.split(",") if tok.strip()]
    if not tokens:
        print("--param lists no values", file=sys.stderr)
        return EXIT_CONFIG
    try:
        values = [float(tok) for tok in tokens]
    except ValueError as exc:
        print(f"--param: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    jobs = [(manifest, name, v, tok) for v, tok in zip(values, tokens)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]

    # summary written by the parent in parameter order, so the output does
    # not depend on worker count or completion order
    lines = [f"{name}={tok} final_front={_fmt(s_end)}" for tok, s_end in results]
    (manifest.output_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    print(f"sweep complete: {len(results)} runs under {manifest.output_dir}")
    return EXIT_OK


def _cmd_converge(manifest: RunManifest) -> int:
    t_order, s_order = richardson_orders(manifest.spec, manifest.grid, manifest.solver)
    print(f"temporal_order = {t_order:.3f}")
    print(f"spatial_order = {s_order:.3f}")
    return EXIT_OK


def _cmd_growth(manifest: RunManifest) -> int:
    report = run(manifest.spec, manifest.grid, manifest.solver,
                 record_stride=manifest.output_stride)
    report.meta["notes"] = manifest.warnings
    if manifest.output_dir is not None:
        emit_report(report, manifest.output_dir, plot=manifest.plot)
    t_end = manifest.grid.t_end
    s0 = manifest.spec.s0
    s_end = float(report.final_state.s)
    speed_end = front_speed(report.final_state, manifest.spec)
    try:
        fit = fit_power_law(report, (t_end / 2.0, t_end))
        print(f"beta_hat = {fit.beta_hat:.4f}")
        print(f"r_squared = {fit.r_squared:.6f}")
    except ValueError as exc:
        print(f"tail fit unavailable: {exc}")
    print(f"s(t_end)/s0 = {s_end / s0:.4f}")
    print(f"front_speed(t_end) = {speed_end:.6g}")
    ok = s_end > 3.0 * s0 and speed_end > 0.0
    if manifest.warnings:
        # degenerate zero-drive configs cannot grow; report why
        print("no drive")
    print("growth: PASS" if ok else "growth: FAIL")
    return EXIT_OK if ok else EXIT_CHECK


def _read_observed(path: Path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except (ValueError, IndexError):
            continue  # header or malformed line
    if not rows:
        raise ValueError(f"no (t, s) rows found in {path}")
    return np.array(rows)


def _cmd_calibrate(manifest: RunManifest, observed_path: str) -> int:
    observed = _read_observed(Path(observed_path))
    a0_lo, a0_hi = manifest.a0_bracket
    result = calibrate_a0(
        manifest.spec, manifest.grid, manifest.solver, observed, a0_lo, a0_hi
    )
    print(f"a0_hat = {result.a0_hat:.6g}")
    print(f"sse = {result.sse:.6g}")
    print(f"evaluations = {result.n_evals}")
    if result.boundary is not None:
        print(f"warning: converged to the {result.boundary} bracket edge;"
              " widen the bracket")
    if manifest.output_dir is not None:
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
        (manifest.output_dir / "calibration.txt").write_text(
            f"a0_hat = {_fmt(result.a0_hat)}\n"
            f"sse = {_fmt(result.sse)}\n"
            f"boundary = {result.boundary}\n"
            f"evaluations = {result.n_evals}\n"
        )
    return EXIT_OK


def _cmd_check(manifest: RunManifest) -> int:
    spec = manifest.spec
    report = run(spec, manifest.grid, manifest.solver,
                 record_stride=manifest.output_stride)
    results = []

    mono = bool(np.all(np.diff(report.fronts) >= 0.0))
    results.append(("front_nondecreasing", mono))

    cap = spec.concentration_cap()
    envelope = spec.s0 + spec.a0 * cap * report.times
    results.append(
        ("growth_bound", bool(np.max(report.fronts - envelope) <= 1e-12))
    )

    if manifest.solver.advection == "upwind":
        max_viol = float(np.max(report.bound_violations))
        results.append(("value_bounds", max_viol <= manifest.solver.bounds_tol))
        results.append(("energy_finite", bool(np.all(np.isfinite(report.energies)))))
    else:
        print("check value_bounds: SKIPPED (central advection)")
        print("check energy_finite: SKIPPED (central advection)")

    if spec.b_infinity is not None and spec.b_infinity > 0.0:
        residual = stationary_residual(spec)
        results.append(("stationary_residual_positive", residual > 0.0))
        print(f"stationary_residual = {residual:.6g}")

    ok = True
    for name, passed in results:
        print(f"check {name}: {'PASS' if passed else 'FAIL'}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_CHECK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rubberfront",
        description="Simulate diffusant uptake with a kinetically driven front",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--out", default=None, help="output directory")
        if name == "sweep":
            p.add_argument("--param", required=True,
                           help="swept parameter, e.g. a0=0.5,1,2")
            p.add_argument("--workers", type=int, default=1)
        if name == "calibrate":
            p.add_argument("--observed", required=True,
                           help="CSV of observed t,s samples")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        manifest = _load_manifest(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if manifest.output_dir is None and args.command in ("run", "sweep"):
        print("this command requires --out", file=sys.stderr)
        return EXIT_CONFIG

    for note in manifest.warnings:
        print(f"warning: {note}", file=sys.stderr)

    try:
        if args.command == "run":
            return _cmd_run(manifest)
        if args.command == "sweep":
            return _cmd_sweep(manifest, args.param, args.workers)
        if args.command == "converge":
            return _cmd_converge(manifest)
        if args.command == "growth":
            return _cmd_growth(manifest)
        if args.command == "calibrate":
            return _cmd_calibrate(manifest, args.observed)
        if args.command == "check":
            return _cmd_check(manifest)
    except InvalidSpecError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepRejected, RefinementError, BracketError, OSError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
