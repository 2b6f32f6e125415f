"""Shared reference problems and randomized spec generation."""

import numpy as np
import pytest

from rubberfront import (
    BoundaryDriver,
    Grid,
    InitialProfile,
    ProblemSpec,
    SolverConfig,
    run,
)


def smooth_spec() -> ProblemSpec:
    """Constant drive with a linear initial profile that satisfies both
    boundary conditions at t = 0, so refinement studies see clean orders."""
    return ProblemSpec(
        a0=1.0,
        beta=1.0,
        gamma=1.0,
        s0=1.0,
        b=BoundaryDriver.constant(1.0),
        u0=InitialProfile.from_table([(0.0, 0.75), (1.0, 0.5)]),
        b_lower=1.0,
        b_upper=1.0,
        b_infinity=1.0,
    )


def growth_spec() -> ProblemSpec:
    """Fast-kinetics reference for the long-horizon growth study."""
    return ProblemSpec(
        a0=30.0,
        beta=1.0,
        gamma=1.0,
        s0=1.0,
        b=BoundaryDriver.constant(1.0),
        u0=InitialProfile.constant(0.0),
        b_lower=1.0,
        b_upper=1.0,
        b_infinity=1.0,
    )


def zero_drive_spec() -> ProblemSpec:
    return ProblemSpec(
        a0=1.0,
        beta=1.0,
        gamma=1.0,
        s0=1.0,
        b=BoundaryDriver.constant(0.0),
        u0=InitialProfile.constant(0.0),
        b_lower=0.0,
        b_upper=0.0,
    )


def random_admissible_spec(rng: np.random.Generator, with_b_infinity=None) -> ProblemSpec:
    """Draw one admissible spec; drivers and profiles mix constants and tables."""
    gamma = rng.uniform(0.5, 2.0)
    beta = rng.uniform(0.2, 2.0)
    a0 = rng.uniform(0.2, 2.0)
    s0 = rng.uniform(0.5, 1.5)
    b_lo = rng.uniform(0.2, 0.8)
    b_hi = b_lo + rng.uniform(0.1, 1.0)

    if rng.random() < 0.5:
        b = BoundaryDriver.constant(rng.uniform(b_lo, b_hi))
    else:
        n_knots = rng.integers(2, 5)
        times = np.sort(rng.uniform(0.0, 1.5, n_knots))
        times += 0.01 * np.arange(n_knots)  # enforce strict increase
        vals = rng.uniform(b_lo, b_hi, n_knots)
        b = BoundaryDriver.from_table(list(zip(times, vals)))

    cap = b_hi / gamma
    if rng.random() < 0.5:
        u0 = InitialProfile.constant(rng.uniform(0.0, cap))
    else:
        n_knots = rng.integers(2, 5)
        pos = np.sort(rng.uniform(0.0, s0, n_knots))
        pos += 1e-3 * s0 * np.arange(n_knots)
        pos = np.clip(pos, 0.0, s0)
        if pos[-1] <= pos[-2]:  # clipping may collapse the last gap
            pos[-1] = s0
        vals = rng.uniform(0.0, cap, n_knots)
        u0 = InitialProfile.from_table(list(zip(pos, vals)))

    if with_b_infinity is None:
        with_b_infinity = rng.random() < 0.5
    b_inf = rng.uniform(b_lo, b_hi) if with_b_infinity else None
    return ProblemSpec(
        a0=a0, beta=beta, gamma=gamma, s0=s0, b=b, u0=u0,
        b_lower=b_lo, b_upper=b_hi, b_infinity=b_inf,
    )


MINIMAL_CONFIG = """\
a0 = 1.0
beta = 1.0
gamma = 1.0
s0 = 1.0
b_lower = 1.0
b_upper = 1.0
b.kind = constant
b.value = 1.0
u0.kind = constant
u0.value = 0.0
grid.n_cells = 16
grid.dt = 0.05
grid.t_end = 1.0
"""


@pytest.fixture(scope="session")
def growth_report():
    """Reference long run shared by the growth, energy and exponent checks."""
    grid = Grid(n_cells=128, dt=0.05, t_end=5000.0)
    return run(growth_spec(), grid, SolverConfig(advection="upwind"),
               record_stride=20)


@pytest.fixture(scope="session")
def growth_report_half_dt():
    grid = Grid(n_cells=128, dt=0.025, t_end=5000.0)
    return run(growth_spec(), grid, SolverConfig(advection="upwind"),
               record_stride=40)
