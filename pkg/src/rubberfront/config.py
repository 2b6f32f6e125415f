"""Flat key=value run configuration.

Sections are expressed through dotted keys (solver.picard.tol).  Tables are
comma-separated position:value pairs, for example

    b.table = 0:1.0, 10:2.0

Parsing reports every problem it finds, each with the offending line
number where one exists; admissibility problems are reported with the name
of the broken rule (A1/A2/A3/A2').
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .domain import Grid
from .model import BoundaryDriver, InitialProfile, ProblemSpec, check_admissibility
from .solver import SolverConfig

__all__ = ["RunManifest", "ConfigError", "parse_config", "COMMANDS"]

COMMANDS = ("run", "sweep", "converge", "growth", "calibrate", "check")

_KNOWN_KEYS = {
    "a0": "float",
    "beta": "float",
    "gamma": "float",
    "s0": "float",
    "b_lower": "float",
    "b_upper": "float",
    "b_infinity": "float",
    "b.kind": ("constant", "table"),
    "b.value": "float",
    "b.table": "table",
    "u0.kind": ("constant", "table"),
    "u0.value": "float",
    "u0.table": "table",
    "grid.n_cells": "int",
    "grid.dt": "float",
    "grid.t_end": "float",
    "solver.advection": ("central", "upwind"),
    "solver.picard.enabled": "bool",
    "solver.picard.max_iters": "int",
    "solver.picard.tol": "float",
    "solver.bounds_tol": "float",
    "output.stride": "int",
    "output.plot": "bool",
    "calibrate.a0_min": "float",
    "calibrate.a0_max": "float",
}

_REQUIRED_KEYS = (
    "a0",
    "beta",
    "gamma",
    "s0",
    "b_lower",
    "b_upper",
    "b.kind",
    "u0.kind",
    "grid.n_cells",
    "grid.dt",
    "grid.t_end",
)


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = tuple(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class RunManifest:
    """Fully validated inputs of one command invocation."""

    command: str
    spec: ProblemSpec
    grid: Grid
    solver: SolverConfig
    output_dir: Optional[Path]
    output_stride: int
    plot: bool
    a0_bracket: Optional[Tuple[float, float]]
    warnings: Tuple[str, ...]


def _parse_scalar(kind, raw: str):
    if kind == "float":
        return float(raw)
    if kind == "int":
        v = int(raw)
        return v
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "false"):
            return low == "true"
        raise ValueError(f"expected true or false, got {raw!r}")
    if kind == "table":
        pairs = []
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            if ":" not in item:
                raise ValueError(f"expected position:value pairs, got {item!r}")
            pos, val = item.split(":", 1)
            pairs.append((float(pos), float(val)))
        if not pairs:
            raise ValueError("table has no entries")
        return tuple(pairs)
    # choice kinds are tuples of allowed strings
    if raw not in kind:
        raise ValueError(f"expected one of {'/'.join(kind)}, got {raw!r}")
    return raw


def parse_config(
    text: str,
    command: str = "run",
    output_dir: Optional[Path] = None,
) -> RunManifest:
    """Parse and validate config-file contents into a RunManifest.

    All detected problems are raised at once as a ConfigError.  A config
    whose only admissibility problem is the degenerate zero drive parses
    with a warning in the manifest instead of an error.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")

    errors = []
    entries = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            errors.append(f"line {line_no}: expected key = value")
            continue
        key, raw = stripped.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        if key not in _KNOWN_KEYS:
            errors.append(f"line {line_no}: unknown key {key!r}")
            continue
        if key in entries:
            first_line = entries[key][1]
            errors.append(
                f"line {line_no}: duplicate key {key!r} (first set on line {first_line})"
            )
            continue
        entries[key] = (raw, line_no)

    for key in _REQUIRED_KEYS:
        if key not in entries:
            errors.append(f"missing required key {key!r}")
    if errors:
        raise ConfigError(errors)

    values = {}
    for key, (raw, line_no) in entries.items():
        try:
            values[key] = _parse_scalar(_KNOWN_KEYS[key], raw)
        except ValueError as exc:
            errors.append(f"line {line_no}: {key}: {exc}")
    if errors:
        raise ConfigError(errors)

    def line_of(key):
        return entries[key][1]

    def build_input(prefix, builder):
        kind = values[f"{prefix}.kind"]
        value_key = f"{prefix}.value"
        table_key = f"{prefix}.table"
        if kind == "constant":
            if table_key in values:
                errors.append(
                    f"line {line_of(table_key)}: {table_key} conflicts with"
                    f" {prefix}.kind = constant"
                )
            if value_key not in values:
                errors.append(f"{value_key} is required when {prefix}.kind = constant")
                return None
            return builder.constant(values[value_key])
        if value_key in values:
            errors.append(
                f"line {line_of(value_key)}: {value_key} conflicts with"
                f" {prefix}.kind = table"
            )
        if table_key not in values:
            errors.append(f"{table_key} is required when {prefix}.kind = table")
            return None
        try:
            return builder.from_table(values[table_key])
        except ValueError as exc:
            errors.append(f"line {line_of(table_key)}: {table_key}: {exc}")
            return None

    driver = build_input("b", BoundaryDriver)
    profile = build_input("u0", InitialProfile)

    if values["grid.n_cells"] < 4:
        errors.append(f"line {line_of('grid.n_cells')}: grid.n_cells must be at least 4")
    if not values["grid.dt"] > 0.0:
        errors.append(f"line {line_of('grid.dt')}: grid.dt must be positive")
    elif values["grid.t_end"] < values["grid.dt"]:
        errors.append(
            f"line {line_of('grid.t_end')}: grid.t_end must be at least grid.dt"
        )
    stride = values.get("output.stride", 1)
    if stride < 1:
        errors.append(f"line {line_of('output.stride')}: output.stride must be >= 1")

    picard_keys = ("solver.picard.max_iters", "solver.picard.tol")
    try:
        solver = SolverConfig(
            advection=values.get("solver.advection", "central"),
            picard=values.get("solver.picard.enabled", False),
            picard_max_iters=values.get("solver.picard.max_iters", 10),
            picard_tol=values.get("solver.picard.tol", 1e-10),
            bounds_tol=values.get("solver.bounds_tol", 1e-10),
        )
    except ValueError as exc:
        solver = None
        lines = [str(line_of(k)) for k in picard_keys if k in entries]
        where = f" (lines {', '.join(lines)})" if lines else ""
        errors.append(f"solver configuration invalid{where}: {exc}")

    bracket = None
    has_min = "calibrate.a0_min" in values
    has_max = "calibrate.a0_max" in values
    if has_min != has_max:
        errors.append("calibrate.a0_min and calibrate.a0_max must be given together")
    elif has_min:
        a0_lo, a0_hi = values["calibrate.a0_min"], values["calibrate.a0_max"]
        if not 0.0 < a0_lo < a0_hi:
            errors.append(
                f"line {line_of('calibrate.a0_min')}: calibration bracket must"
                " satisfy 0 < a0_min < a0_max"
            )
        else:
            bracket = (a0_lo, a0_hi)
    if command == "calibrate" and bracket is None and not errors:
        errors.append("calibrate requires calibrate.a0_min and calibrate.a0_max")

    if errors:
        raise ConfigError(errors)

    spec = ProblemSpec(
        a0=values["a0"],
        beta=values["beta"],
        gamma=values["gamma"],
        s0=values["s0"],
        b=driver,
        u0=profile,
        b_lower=values["b_lower"],
        b_upper=values["b_upper"],
        b_infinity=values.get("b_infinity"),
    )
    violations = check_admissibility(spec)
    fatal = [v for v in violations if not v.degenerate]
    if fatal:
        raise ConfigError([f"admissibility: {v}" for v in fatal])
    warn = tuple(str(v) for v in violations if v.degenerate)

    grid = Grid(
        n_cells=values["grid.n_cells"],
        dt=values["grid.dt"],
        t_end=values["grid.t_end"],
    )
    return RunManifest(
        command=command,
        spec=spec,
        grid=grid,
        solver=solver,
        output_dir=Path(output_dir) if output_dir is not None else None,
        output_stride=stride,
        plot=values.get("output.plot", False),
        a0_bracket=bracket,
        warnings=warn,
    )
