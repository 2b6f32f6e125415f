"""Post-hoc analyses: power-law fits, convergence orders, calibration.

Everything here works on immutable inputs; the calibration loop performs
its own forward runs but never mutates the template spec.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .domain import Grid, TransformedState, initial_transformed
from .model import ProblemSpec
from .solver import SolveReport, SolverConfig, StepRejected, run, step

__all__ = [
    "PowerLawFit",
    "fit_power_law",
    "temporal_order",
    "spatial_order",
    "richardson_orders",
    "RefinementError",
    "stationary_residual",
    "CalibrationResult",
    "BracketError",
    "golden_section_log",
    "calibrate_a0",
    "contraction_dt",
]


class RefinementError(RuntimeError):
    """Refinement study outside the asymptotic regime; refine further."""


class BracketError(RuntimeError):
    """Calibration objective is not unimodal; widen or split the bracket."""


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of s ~ c * t^beta over a time window."""

    beta_hat: float
    c_hat: float
    r_squared: float
    window: Tuple[float, float]


def fit_power_law(report: SolveReport, window: Tuple[float, float]) -> PowerLawFit:
    """Fit log s against log t by ordinary least squares over the window.

    The window must contain at least 10 samples with strictly positive
    times and fronts.
    """
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise ValueError(f"empty window ({t_lo}, {t_hi})")
    t = report.times
    s = report.fronts
    mask = (t >= t_lo) & (t <= t_hi)
    if int(mask.sum()) < 10:
        raise ValueError(f"window holds {int(mask.sum())} samples, need at least 10")
    tw = t[mask]
    sw = s[mask]
    if tw.min() <= 0.0 or sw.min() <= 0.0:
        raise ValueError("window values must be strictly positive")
    log_t = np.log(tw)
    log_s = np.log(sw)
    slope, intercept = np.polyfit(log_t, log_s, 1)
    pred = slope * log_t + intercept
    ss_res = float(np.sum((log_s - pred) ** 2))
    ss_tot = float(np.sum((log_s - log_s.mean()) ** 2))
    if ss_tot > 0.0:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    else:
        r2 = 1.0 if ss_res <= 1e-28 else 0.0
    return PowerLawFit(
        beta_hat=float(slope),
        c_hat=float(math.exp(intercept)),
        r_squared=r2,
        window=(float(t_lo), float(t_hi)),
    )


def _front_at_end(spec, grid, config) -> float:
    n_steps = int(round(grid.t_end / grid.dt))
    report = run(spec, grid, config, record_stride=max(n_steps, 1))
    return float(report.final_state.s)


def _order_from(values: Sequence[float]) -> float:
    d1 = values[0] - values[1]
    d2 = values[1] - values[2]
    if d1 == 0.0 or d2 == 0.0 or abs(d1) <= abs(d2):
        raise RefinementError(
            "difference ratios are not monotone: not in the asymptotic"
            " regime, refine further"
        )
    return math.log2(abs(d1) / abs(d2))


def temporal_order(
    spec: ProblemSpec,
    grid: Grid,
    config: SolverConfig,
    dts: Optional[Sequence[float]] = None,
) -> float:
    """Observed time order from front positions at three step sizes.

    Uses (dt, dt/2, dt/4) at the grid's node count by default; the spatial
    error is identical across the three runs and cancels in differences.
    """
    if dts is None:
        dts = (grid.dt, grid.dt / 2.0, grid.dt / 4.0)
    dts = [float(d) for d in dts]
    if len(dts) != 3 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("need three strictly decreasing step sizes")
    ends = [
        _front_at_end(spec, replace(grid, dt=d), config)
        for d in dts
    ]
    return _order_from(ends)


def spatial_order(
    spec: ProblemSpec,
    grid: Grid,
    config: SolverConfig,
    n_values: Optional[Sequence[int]] = None,
) -> float:
    """Observed space order from front positions at three node counts.

    Uses (n, 2n, 4n) at the grid's fixed step size by default; the step
    size should be small so temporal error does not pollute the
    differences.
    """
    if n_values is None:
        n_values = (grid.n_cells, 2 * grid.n_cells, 4 * grid.n_cells)
    n_values = [int(n) for n in n_values]
    if len(n_values) != 3 or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("need three strictly increasing node counts")
    ends = [
        _front_at_end(spec, replace(grid, n_cells=n), config)
        for n in n_values
    ]
    return _order_from(ends)


def richardson_orders(
    spec: ProblemSpec,
    base_grid: Grid,
    config: SolverConfig,
) -> Tuple[float, float]:
    """Observed (temporal, spatial) orders of the scheme on a smooth spec.

    Temporal: steps (dt, dt/2, dt/4) at the base node count.  Spatial:
    node counts (n, 2n, 4n) at the smallest of those steps.
    """
    t_order = temporal_order(spec, base_grid, config)
    s_order = spatial_order(spec, replace(base_grid, dt=base_grid.dt / 4.0), config)
    return t_order, s_order


def stationary_residual(spec: ProblemSpec) -> float:
    """Violation of the would-be steady state under the limit drive.

    The steady problem (no time derivative, zero flux at the front, the
    transfer condition at the inlet) forces the constant profile
    b_infinity / gamma, so the remaining requirement of a vanishing value
    at the front is missed by exactly that constant.  A strictly positive
    return certifies that no bounded steady state exists, independently of
    any candidate front position.
    """
    if spec.b_infinity is None:
        raise ValueError("spec has no b_infinity; set it for stationary checks")
    if spec.b_infinity == 0.0:
        warnings.warn(
            "b_infinity = 0 is outside the admissibility assumptions (A2')",
            RuntimeWarning,
            stacklevel=2,
        )
    return spec.b_infinity / spec.gamma


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_log(f, lo: float, hi: float, rel_tol: float = 1e-3,
                       n_scan: int = 5):
    """Golden-section minimization on a log-scaled positive bracket.

    A coarse log-spaced scan first rejects brackets holding more than one
    interior local minimum.  Returns (x_min, f_min, boundary, n_evals)
    where boundary is "lower"/"upper" when the minimizer sits at a bracket
    edge (within twice the tolerance) and None otherwise.
    """
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    evals = [0]

    def g(x_log):
        evals[0] += 1
        return f(math.exp(x_log))

    a = math.log(lo)
    b = math.log(hi)
    tol_log = math.log1p(rel_tol)

    scan_x = np.linspace(a, b, n_scan)
    scan_f = [g(x) for x in scan_x]
    interior_minima = sum(
        1
        for i in range(1, n_scan - 1)
        if scan_f[i] < scan_f[i - 1] and scan_f[i] < scan_f[i + 1]
    )
    if interior_minima > 1:
        raise BracketError(
            "objective has several interior minima on the bracket:"
            " widen or split bracket"
        )

    h = b - a
    c = b - _INV_PHI * h
    d = a + _INV_PHI * h
    fc = g(c)
    fd = g(d)
    while h > tol_log:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - _INV_PHI * h
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = g(d)
    x_log, f_min = (c, fc) if fc < fd else (d, fd)

    boundary = None
    if x_log - math.log(lo) <= 2.0 * tol_log:
        boundary = "lower"
    elif math.log(hi) - x_log <= 2.0 * tol_log:
        boundary = "upper"
    return math.exp(x_log), f_min, boundary, evals[0]


@dataclass(frozen=True)
class CalibrationResult:
    """Recovered rate coefficient with its misfit and search flags."""

    a0_hat: float
    sse: float
    boundary: Optional[str]
    n_evals: int


def calibrate_a0(
    spec_template: ProblemSpec,
    grid: Grid,
    config: SolverConfig,
    observed,
    a0_lo: float,
    a0_hi: float,
    rel_tol: float = 1e-3,
) -> CalibrationResult:
    """Fit the front-rate coefficient to observed (t, s) samples.

    Minimizes the sum of squared front misfits over a0 by golden-section
    search on log a0 (the coefficient is a positive rate that may span
    decades).  Simulated fronts are interpolated linearly in time.  A
    result at a bracket edge is flagged through CalibrationResult.boundary;
    a bracket that shows several interior minima raises BracketError.
    """
    obs = np.asarray(observed, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != 2 or obs.shape[0] == 0:
        raise ValueError("observed must be a nonempty array of (t, s) rows")
    t_obs = obs[:, 0]
    s_obs = obs[:, 1]
    if t_obs.min() <= 0.0 or t_obs.max() > grid.t_end:
        raise ValueError("observed times must lie in (0, t_end]")

    def objective(a0):
        report = run(replace(spec_template, a0=a0), grid, config)
        sim = np.interp(t_obs, report.times, report.fronts)
        return float(np.sum((sim - s_obs) ** 2))

    a0_hat, sse, boundary, n_evals = golden_section_log(
        objective, a0_lo, a0_hi, rel_tol=rel_tol
    )
    return CalibrationResult(a0_hat=a0_hat, sse=sse, boundary=boundary, n_evals=n_evals)


def contraction_dt(
    spec: ProblemSpec,
    grid: Grid,
    config: SolverConfig,
    dt_lo: Optional[float] = None,
    n_probe_steps: int = 5,
    bisect_iters: int = 30,
) -> float:
    """Largest probed step size at which the fixed-point loop contracts.

    A step size passes the probe when, over the first few steps from t = 0,
    every fixed-point loop converges and all successive endpoint-error
    ratios stay below one.  The threshold is located by doubling from a
    passing step size and bisecting the failing gap.
    """
    if dt_lo is None:
        dt_lo = grid.dt
    probe_cfg = replace(config, picard=True, picard_max_iters=12, picard_tol=1e-9)

    def contracts(dt: float) -> bool:
        probe_grid = replace(grid, dt=dt, t_end=max(dt * n_probe_steps, dt))
        state = TransformedState(
            t=0.0, s=spec.s0, u_tilde=initial_transformed(spec, grid.n_cells)
        )
        try:
            for _ in range(n_probe_steps):
                state, diag = step(state, spec, probe_grid, probe_cfg)
                if any(r >= 1.0 for r in diag.picard_ratios):
                    return False
        except StepRejected:
            return False
        return True

    if not contracts(dt_lo):
        raise RefinementError(f"fixed-point loop already diverges at dt={dt_lo:g}")
    good = dt_lo
    bad = None
    dt = dt_lo
    while bad is None and dt < grid.t_end:
        dt *= 2.0
        if contracts(dt):
            good = dt
        else:
            bad = dt
    if bad is None:
        return good
    for _ in range(bisect_iters):
        mid = math.sqrt(good * bad)
        if contracts(mid):
            good = mid
        else:
            bad = mid
        if bad / good < 1.01:
            break
    return good
