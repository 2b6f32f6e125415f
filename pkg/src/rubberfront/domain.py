"""Fixed computational grid and maps between moving and fixed domains.

The moving interval [0, s] is mapped onto the unit interval through the
front-normalized coordinate y = z / s.  Both maps below are exact nodal
relabelings when the sample points line up, and piecewise-linear
interpolation otherwise, so they are monotone and bound preserving.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

__all__ = [
    "Grid",
    "TransformedState",
    "PhysicalField",
    "to_physical",
    "to_fixed_domain",
    "trapezoid_mass",
    "initial_transformed",
]


@dataclass(frozen=True)
class Grid:
    """Uniform nodes y_i = i/n_cells on [0, 1] plus time-step control."""

    n_cells: int
    dt: float
    t_end: float

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError(f"n_cells must be at least 4, got {self.n_cells}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ValueError(f"t_end={self.t_end} is smaller than dt={self.dt}")

    @property
    def dy(self) -> float:
        return 1.0 / self.n_cells

    @property
    def y_nodes(self) -> np.ndarray:
        return unit_nodes(self.n_cells)


@lru_cache(maxsize=None)
def unit_nodes(n_cells: int) -> np.ndarray:
    y = np.linspace(0.0, 1.0, n_cells + 1)
    y.setflags(write=False)
    return y


@dataclass(frozen=True)
class TransformedState:
    """Front position and nodal values on the fixed grid at one time level.

    Treat u_tilde as read only; the solver always returns fresh arrays.
    """

    t: float
    s: float
    u_tilde: np.ndarray


@dataclass(frozen=True)
class PhysicalField:
    """Concentration on the moving domain [0, s] at nodes z_i = y_i * s."""

    s: float
    z_nodes: np.ndarray
    u: np.ndarray


def to_physical(state: TransformedState) -> PhysicalField:
    """Relabel fixed-domain nodal values onto the moving domain, u(z) = u~(z/s)."""
    if not state.s > 0.0:
        raise ValueError(f"front position must be positive, got {state.s}")
    y = unit_nodes(len(state.u_tilde) - 1)
    return PhysicalField(s=state.s, z_nodes=y * state.s, u=np.array(state.u_tilde))


def to_fixed_domain(field: PhysicalField, n_cells: Optional[int] = None) -> np.ndarray:
    """Sample a physical field at the fixed-domain nodes, u~(y) = u(y s).

    When the field is already given at z_i = y_i * s for the requested node
    count, the result is a bit-exact copy; otherwise the field is
    interpolated piecewise linearly in z.
    """
    if not field.s > 0.0:
        raise ValueError(f"front position must be positive, got {field.s}")
    if n_cells is None:
        n_cells = len(field.u) - 1
    target = unit_nodes(n_cells) * field.s
    if len(field.u) == n_cells + 1 and np.array_equal(field.z_nodes, target):
        return np.array(field.u)
    return np.interp(target, field.z_nodes, field.u)


def trapezoid_mass(field: PhysicalField) -> float:
    """Trapezoidal approximation of the stored amount, integral of u over [0, s]."""
    return float(np.trapezoid(field.u, field.z_nodes))


def initial_transformed(spec, n_cells: int) -> np.ndarray:
    """Sample the initial profile at the fixed-domain nodes, u~(0, y) = u0(y s0)."""
    return spec.u0.sample(unit_nodes(n_cells) * spec.s0)
