"""Problem data for diffusant uptake with a kinetically driven front.

The model tracks a concentration profile u on a growing interval [0, s(t)].
Matter enters at z = 0 through a transfer condition against an external
drive level b(t), and the front at z = s(t) advances at a rate proportional
to the positive part of the concentration right at the front.

This module holds the problem parameters, the two admissible classes of
input functions (constants and piecewise-linear tables), the admissibility
rules A1/A2/A3/A2' used throughout the package, and the convex energy
functional recorded as a run diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "BoundaryDriver",
    "InitialProfile",
    "ProblemSpec",
    "Violation",
    "InvalidSpecError",
    "positive_part",
    "check_admissibility",
    "energy",
]


def positive_part(r: float) -> float:
    """max(r, 0); the cut-off that keeps the front speed nonnegative."""
    return r if r > 0.0 else 0.0


def _as_knots(pairs) -> Tuple[Tuple[float, float], ...]:
    knots = tuple((float(x), float(v)) for x, v in pairs)
    if not knots:
        raise ValueError("table must contain at least one knot")
    xs = [k[0] for k in knots]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("table positions must be strictly increasing")
    return knots


@dataclass(frozen=True)
class BoundaryDriver:
    """Drive level b(t), either a constant or a piecewise-linear table.

    Evaluation outside the table's time span clamps to the nearest knot, so
    a driver never leaves the value range spanned by its entries.
    """

    value: Optional[float] = None
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if (self.value is None) == (self.table is None):
            raise ValueError("give exactly one of value= or table=")
        if self.table is not None:
            knots = _as_knots(self.table)
            object.__setattr__(self, "table", knots)
            object.__setattr__(self, "_xs", np.array([k[0] for k in knots]))
            object.__setattr__(self, "_vs", np.array([k[1] for k in knots]))

    @classmethod
    def constant(cls, c: float) -> "BoundaryDriver":
        return cls(value=float(c))

    @classmethod
    def from_table(cls, pairs) -> "BoundaryDriver":
        return cls(table=tuple(pairs))

    def value_at(self, t: float) -> float:
        if self.value is not None:
            return self.value
        return float(np.interp(t, self._xs, self._vs))

    def value_range(self) -> Tuple[float, float]:
        if self.value is not None:
            return self.value, self.value
        vs = [k[1] for k in self.table]
        return min(vs), max(vs)


@dataclass(frozen=True)
class InitialProfile:
    """Initial concentration u0(z) on [0, s0], constant or piecewise linear."""

    value: Optional[float] = None
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if (self.value is None) == (self.table is None):
            raise ValueError("give exactly one of value= or table=")
        if self.table is not None:
            knots = _as_knots(self.table)
            object.__setattr__(self, "table", knots)
            object.__setattr__(self, "_xs", np.array([k[0] for k in knots]))
            object.__setattr__(self, "_vs", np.array([k[1] for k in knots]))

    @classmethod
    def constant(cls, c: float) -> "InitialProfile":
        return cls(value=float(c))

    @classmethod
    def from_table(cls, pairs) -> "InitialProfile":
        return cls(table=tuple(pairs))

    def sample(self, z) -> np.ndarray:
        """Evaluate the profile at positions z (clamped to the table span)."""
        z = np.asarray(z, dtype=float)
        if self.value is not None:
            return np.full(z.shape, self.value)
        return np.interp(z, self._xs, self._vs)

    def value_range(self) -> Tuple[float, float]:
        if self.value is not None:
            return self.value, self.value
        vs = [k[1] for k in self.table]
        return min(vs), max(vs)

    def position_range(self) -> Tuple[float, float]:
        if self.value is not None:
            return 0.0, 0.0
        xs = [k[0] for k in self.table]
        return min(xs), max(xs)


@dataclass(frozen=True)
class ProblemSpec:
    """All parameters and input functions of one uptake problem.

    a0      kinetic rate coefficient of the front law, > 0
    beta    transfer coefficient at the fixed boundary, > 0
    gamma   partition coefficient, > 0
    s0      initial front position, > 0
    b       drive level over time
    u0      initial concentration on [0, s0]
    b_lower, b_upper
            bounds b_* <= b(t) <= b_upper that the drive must respect
    b_infinity
            optional limit value of the drive for long-horizon studies
    """

    a0: float
    beta: float
    gamma: float
    s0: float
    b: BoundaryDriver
    u0: InitialProfile
    b_lower: float
    b_upper: float
    b_infinity: Optional[float] = None

    def boundary_value(self, t: float) -> float:
        return self.b.value_at(t)

    def concentration_cap(self) -> float:
        """Upper bound b_upper/gamma that admissible solutions never exceed."""
        if self.gamma <= 0.0:
            return math.inf
        return self.b_upper / self.gamma


@dataclass(frozen=True)
class Violation:
    """One broken admissibility rule; a degenerate violation is runnable."""

    assumption: str  # "A1", "A2", "A3" or "A2'"
    message: str
    degenerate: bool = False

    def __str__(self) -> str:
        return f"({self.assumption}) {self.message}"


class InvalidSpecError(ValueError):
    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _is_zero_drive(spec: ProblemSpec) -> bool:
    lo, hi = spec.b.value_range()
    return (
        spec.b_lower == 0.0
        and spec.b_upper >= 0.0
        and lo == 0.0
        and hi == 0.0
        and spec.b_infinity in (None, 0.0)
    )


def check_admissibility(spec: ProblemSpec) -> list:
    """Check the admissibility rules; violations are returned, never raised.

    A1   a0, beta, gamma, s0 positive
    A2   0 < b_lower <= b(t) <= b_upper for all t
    A3   u0 supported on [0, s0] with 0 <= u0 <= b_upper/gamma
    A2'  if b_infinity is given, b_lower <= b_infinity <= b_upper

    The all-zero drive (b identically 0 with b_lower = 0) breaks A2 but is
    reported as a degenerate violation: the solver accepts it so that
    zero-drive dry runs are possible.
    """
    out = []
    for name in ("a0", "beta", "gamma", "s0"):
        val = getattr(spec, name)
        if not val > 0.0:
            out.append(Violation("A1", f"{name} must be positive, got {val}"))
    if spec.b_lower > spec.b_upper:
        out.append(
            Violation("A2", f"b_lower={spec.b_lower} exceeds b_upper={spec.b_upper}")
        )
    zero_drive = _is_zero_drive(spec)
    if zero_drive:
        out.append(
            Violation(
                "A2",
                "zero drive (b identically 0): outside the standing assumptions,"
                " degenerate run allowed",
                degenerate=True,
            )
        )
    elif not spec.b_lower > 0.0:
        out.append(Violation("A2", f"b_lower must be positive, got {spec.b_lower}"))
    lo, hi = spec.b.value_range()
    if lo < spec.b_lower or hi > spec.b_upper:
        if not zero_drive:
            out.append(
                Violation(
                    "A2",
                    f"drive values span [{lo}, {hi}], outside"
                    f" [{spec.b_lower}, {spec.b_upper}]",
                )
            )
    z_lo, z_hi = spec.u0.position_range()
    if z_lo < 0.0 or z_hi > spec.s0:
        out.append(
            Violation("A3", f"initial profile positions outside [0, {spec.s0}]")
        )
    if spec.gamma > 0.0:
        cap = spec.b_upper / spec.gamma
        v_lo, v_hi = spec.u0.value_range()
        if v_lo < 0.0 or v_hi > cap:
            out.append(
                Violation(
                    "A3",
                    f"initial values span [{v_lo}, {v_hi}], outside [0, {cap}]",
                )
            )
    if spec.b_infinity is not None and not zero_drive:
        if not spec.b_lower <= spec.b_infinity <= spec.b_upper:
            out.append(
                Violation(
                    "A2'",
                    f"b_infinity={spec.b_infinity} outside"
                    f" [{spec.b_lower}, {spec.b_upper}]",
                )
            )
    return out


def energy(state, spec: ProblemSpec, t: float) -> float:
    """Convex energy of a fixed-domain state; +inf outside its domain.

    The value combines the scaled gradient energy with two boundary
    integrals that are exact polynomials in the boundary values:

        1/(2 s^2) * integral of u_y^2
        + a0 * u(1)^3 / (3 s)
        - (beta/s) * (b(t) u(0) - gamma u(0)^2 / 2)

    Any negative nodal value puts the state outside the functional's domain,
    in which case math.inf is returned so the diagnostic stays totally
    ordered.  The gradient integral uses nodal derivatives (central in the
    interior, second-order one-sided at the ends) and the trapezoidal rule.
    """
    u = np.asarray(state.u_tilde, dtype=float)
    s = float(state.s)
    if s <= 0.0:
        raise ValueError(f"front position must be positive, got {s}")
    if u.min() < 0.0:
        return math.inf
    dy = 1.0 / (len(u) - 1)
    g = np.gradient(u, dy, edge_order=2)
    grad_term = float(np.trapezoid(g * g, dx=dy)) / (2.0 * s * s)
    c_front = float(u[-1])
    c_in = float(u[0])
    b = spec.boundary_value(t)
    front_term = spec.a0 * c_front**3 / (3.0 * s)
    inlet_term = -(spec.beta / s) * (b * c_in - spec.gamma * c_in * c_in / 2.0)
    return grad_term + front_term + inlet_term
