import math
from dataclasses import replace

import numpy as np
import pytest

from rubberfront import (
    BracketError,
    Grid,
    RefinementError,
    SolveReport,
    SolverConfig,
    TransformedState,
    calibrate_a0,
    contraction_dt,
    fit_power_law,
    golden_section_log,
    richardson_orders,
    run,
    spatial_order,
    stationary_residual,
    temporal_order,
)
from rubberfront.diagnostics import _order_from

from conftest import random_admissible_spec, smooth_spec


def synthetic_report(t, s):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    state = TransformedState(t=t[-1], s=s[-1], u_tilde=np.zeros(5))
    zeros = np.zeros_like(t)
    return SolveReport(
        times=t, fronts=s, front_speeds=zeros, u_at_0=zeros, u_at_1=zeros,
        masses=zeros, mass_residuals=zeros, energies=zeros,
        bound_violations=zeros, meta={}, final_state=state,
    )


class TestFitPowerLaw:
    def test_exact_power_law(self):
        t = np.linspace(1.0, 100.0, 200)
        fit = fit_power_law(synthetic_report(t, 2.0 * t**0.5), (1.0, 100.0))
        assert fit.beta_hat == pytest.approx(0.5, abs=1e-12)
        assert fit.c_hat == pytest.approx(2.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant_series(self):
        t = np.linspace(1.0, 10.0, 50)
        fit = fit_power_law(synthetic_report(t, np.full_like(t, 5.0)), (1.0, 10.0))
        assert abs(fit.beta_hat) <= 1e-12
        assert fit.c_hat == pytest.approx(5.0, rel=1e-12)

    def test_time_rescaling_keeps_exponent(self):
        rng = np.random.default_rng(1)
        t = np.linspace(1.0, 50.0, 80)
        s = 1.3 * t**0.41 * np.exp(rng.normal(0.0, 1e-3, t.size))
        base = fit_power_law(synthetic_report(t, s), (1.0, 50.0))
        lam = 7.5
        scaled = fit_power_law(synthetic_report(lam * t, s), (lam, 50.0 * lam))
        assert scaled.beta_hat == pytest.approx(base.beta_hat, abs=1e-12)
        assert scaled.c_hat == pytest.approx(base.c_hat / lam**base.beta_hat, rel=1e-9)

    def test_small_window_rejected(self):
        t = np.linspace(1.0, 10.0, 50)
        rep = synthetic_report(t, t)
        with pytest.raises(ValueError, match="at least 10"):
            fit_power_law(rep, (9.0, 10.0))

    def test_nonpositive_values_rejected(self):
        t = np.linspace(0.0, 10.0, 50)
        rep = synthetic_report(t, np.ones_like(t))
        with pytest.raises(ValueError, match="positive"):
            fit_power_law(rep, (0.0, 10.0))


class TestRichardson:
    def test_orders_on_smooth_spec(self):
        base = Grid(n_cells=64, dt=4e-3, t_end=1.0)
        t_ord, s_ord = richardson_orders(smooth_spec(), base, SolverConfig())
        assert 0.8 <= t_ord <= 1.2
        assert 1.7 <= s_ord <= 2.3

    def test_duplicate_refinement_rejected(self):
        grid = Grid(n_cells=16, dt=1e-2, t_end=0.1)
        with pytest.raises(ValueError, match="decreasing"):
            temporal_order(smooth_spec(), grid, SolverConfig(),
                           dts=(1e-2, 1e-2, 5e-3))
        with pytest.raises(ValueError, match="increasing"):
            spatial_order(smooth_spec(), grid, SolverConfig(),
                          n_values=(16, 16, 32))

    def test_nonmonotone_differences_flagged(self):
        with pytest.raises(RefinementError, match="asymptotic"):
            _order_from([1.0, 1.1, 1.3])  # second difference grows
        with pytest.raises(RefinementError):
            _order_from([1.0, 1.0, 1.0])  # degenerate, zero differences


class TestStationaryResidual:
    def test_closed_form_value(self):
        spec = replace(smooth_spec(), gamma=2.0, b_infinity=1.0)
        got = stationary_residual(spec)
        assert got == pytest.approx(0.5, abs=1e-15)

        # independent oracle: discrete two-point boundary value problem
        # -u'' = 0, u'(1) = 0, -(1/s) u'(0) = beta (b_inf - gamma u(0))
        n = 40
        h = 1.0 / n
        s = 1.7
        A = np.zeros((n + 1, n + 1))
        rhs = np.zeros(n + 1)
        for i in range(1, n):
            A[i, i - 1 : i + 2] = (1.0, -2.0, 1.0)
        A[0, 0] = -(1.0 + s * h * spec.beta * spec.gamma)
        A[0, 1] = 1.0
        rhs[0] = -s * h * spec.beta * spec.b_infinity
        A[n, n - 1] = 1.0
        A[n, n] = -1.0
        u = np.linalg.solve(A, rhs)
        assert abs(u[-1]) == pytest.approx(got, abs=1e-10)

    def test_positive_for_admissible_specs(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            spec = random_admissible_spec(rng, with_b_infinity=True)
            res = stationary_residual(spec)
            assert res == spec.b_infinity / spec.gamma
            assert res >= spec.b_lower / spec.gamma > 0.0

    def test_missing_limit_rejected(self):
        spec = replace(smooth_spec(), b_infinity=None)
        with pytest.raises(ValueError, match="b_infinity"):
            stationary_residual(spec)

    def test_zero_limit_warns(self):
        spec = replace(smooth_spec(), b_infinity=0.0)
        with pytest.warns(RuntimeWarning, match="A2'"):
            assert stationary_residual(spec) == 0.0


class TestGoldenSection:
    def test_finds_interior_minimum(self):
        x, fx, boundary, n = golden_section_log(
            lambda a: (math.log(a) - math.log(0.37)) ** 2, 0.01, 10.0
        )
        assert x == pytest.approx(0.37, rel=5e-3)
        assert boundary is None

    def test_monotone_objective_flags_boundary(self):
        x, _, boundary, _ = golden_section_log(lambda a: a, 0.1, 10.0)
        assert boundary == "lower"
        x, _, boundary, _ = golden_section_log(lambda a: -a, 0.1, 10.0)
        assert boundary == "upper"

    def test_bimodal_objective_rejected(self):
        # double well in log coordinates, minima at a = 0.1 and a = 10
        def f(a):
            x = math.log10(a)
            return (x * x - 1.0) ** 2
        with pytest.raises(BracketError, match="bracket"):
            golden_section_log(f, 0.01, 100.0, n_scan=13)

    def test_bad_bracket_rejected(self):
        with pytest.raises(ValueError):
            golden_section_log(lambda a: a, -1.0, 2.0)


class TestCalibration:
    def _observed(self, spec, grid):
        report = run(spec, grid, record_stride=10)
        t_obs = np.linspace(1.0, grid.t_end, 12)
        s_obs = np.interp(t_obs, report.times, report.fronts)
        return np.column_stack([t_obs, s_obs])

    def test_roundtrip(self):
        spec = replace(smooth_spec(), a0=0.3)
        grid = Grid(n_cells=48, dt=0.02, t_end=10.0)
        observed = self._observed(spec, grid)
        result = calibrate_a0(spec, grid, SolverConfig(), observed, 0.05, 2.0)
        assert abs(result.a0_hat - 0.3) / 0.3 <= 0.05
        assert result.boundary is None

    def test_flat_front_converges_to_lower_edge(self):
        spec = smooth_spec()
        grid = Grid(n_cells=32, dt=0.05, t_end=5.0)
        t_obs = np.linspace(1.0, 5.0, 10)
        observed = np.column_stack([t_obs, np.full_like(t_obs, spec.s0)])
        result = calibrate_a0(spec, grid, SolverConfig(), observed, 0.05, 2.0)
        assert result.boundary == "lower"

    def test_misplaced_bracket_is_flagged(self):
        spec = replace(smooth_spec(), a0=0.05)
        grid = Grid(n_cells=32, dt=0.05, t_end=5.0)
        observed = self._observed(spec, grid)
        result = calibrate_a0(spec, grid, SolverConfig(), observed, 0.5, 2.0)
        assert result.boundary == "lower"

    def test_bad_observations_rejected(self):
        spec = smooth_spec()
        grid = Grid(n_cells=32, dt=0.05, t_end=5.0)
        with pytest.raises(ValueError):
            calibrate_a0(spec, grid, SolverConfig(), np.empty((0, 2)), 0.1, 1.0)
        with pytest.raises(ValueError, match="t_end"):
            calibrate_a0(spec, grid, SolverConfig(),
                         np.array([[6.0, 1.0]]), 0.1, 1.0)


class TestContraction:
    def test_threshold_found_and_ratios_contract(self):
        spec = smooth_spec()
        grid = Grid(n_cells=64, dt=1e-3, t_end=0.5)
        dt_c = contraction_dt(spec, grid, SolverConfig())
        assert dt_c >= 1e-3
        cfg = SolverConfig(picard=True, picard_max_iters=10, picard_tol=1e-9)
        probe = Grid(n_cells=64, dt=min(0.5 * dt_c, 0.02), t_end=0.5)
        report = run(spec, probe, cfg)
        stats = report.meta["picard"]
        assert stats["ratios_ge_1"] == 0
        assert 0.0 < stats["max_ratio"] < 1.0
