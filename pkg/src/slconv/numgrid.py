"""Uniform grids on [0, pi], trapezoid quadrature and weighted norms.

Every other module works on a :class:`Grid` with an even number of panels so
that half-arguments such as ``t/2`` land on nodes whenever ``t`` has an even
index. Off-node half-arguments are linearly interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [0, pi] into ``panels`` panels."""

    panels: int

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValueError(f"grid panels must be an even integer >= 2, got {self.panels}")

    @property
    def n(self) -> int:
        return self.panels

    @property
    def step(self) -> float:
        return np.pi / self.panels

    @property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.panels + 1) * self.step
        x[-1] = np.pi
        return x

    def weights(self) -> np.ndarray:
        """Composite trapezoid weights on the full grid."""
        w = np.full(self.panels + 1, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w


@dataclass(frozen=True)
class SampledFunction:
    """Complex samples of a function of one variable on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).copy()
        if vals.shape != (self.grid.panels + 1,):
            raise ValueError(
                f"expected {self.grid.panels + 1} samples, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray],
                      singular_end: bool = False) -> "SampledFunction":
        """Sample ``f`` at the grid nodes.

        With ``singular_end`` the value at x = pi is not evaluated and set to 0
        (the weighted value (pi - x) f(x) vanishes there).
        """
        x = grid.nodes
        if singular_end:
            vals = np.zeros(x.size, dtype=complex)
            vals[:-1] = f(x[:-1])
        else:
            vals = np.asarray(f(x), dtype=complex) * np.ones(x.size)
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "SampledFunction":
        return cls(grid, np.zeros(grid.panels + 1, dtype=complex))

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return SampledFunction(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)


def _vals(other):
    return other.values if isinstance(other, SampledFunction) else other


@dataclass(frozen=True)
class WeightedNormReport:
    l2: float
    l2_weighted: float


def quad_integrate(f: SampledFunction, a: int = 0, b: int | None = None) -> complex:
    """Composite trapezoid integral of ``f`` over [x_a, x_b]."""
    n = f.grid.panels
    if b is None:
        b = n
    if not (0 <= a <= b <= n):
        raise ValueError(f"need 0 <= a <= b <= {n}, got a={a}, b={b}")
    if a == b:
        return 0j
    v = f.values[a:b + 1]
    s = 0.5 * v[0] + 0.5 * v[-1]
    for x in v[1:-1]:
        s += x
    return complex(s * f.grid.step)


def trapz(values: np.ndarray, h: float) -> complex:
    """Trapezoid sum of equally spaced samples (zero for fewer than two)."""
    if values.size < 2:
        return 0j
    return h * (values.sum() - 0.5 * (values[0] + values[-1]))


def cumtrapz(values: np.ndarray, h: float) -> np.ndarray:
    """Running trapezoid integral, starting at 0."""
    out = np.zeros(values.size, dtype=np.result_type(values, complex))
    out[1:] = np.cumsum(0.5 * h * (values[1:] + values[:-1]))
    return out


def norms(f: SampledFunction) -> WeightedNormReport:
    w = f.grid.weights()
    a2 = np.abs(f.values) ** 2
    l2 = np.sqrt(np.sum(w * a2))
    l2w = np.sqrt(np.sum(w * (np.pi - f.grid.nodes) ** 2 * a2))
    return WeightedNormReport(float(l2), float(l2w))


def l2(values: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(grid.weights() * np.abs(values) ** 2)))


def l2_weighted(values: np.ndarray, grid: Grid) -> float:
    return l2((np.pi - grid.nodes) * values, grid)


def l1(values: np.ndarray, grid: Grid) -> float:
    return float(np.sum(grid.weights() * np.abs(values)))


def remark1_transforms(M: SampledFunction):
    """Return ``(M0, M1, Q)`` with M0 = (pi - x) M, M1 = int_0^x M, Q = M0 - M1."""
    g = M.grid
    m0 = (np.pi - g.nodes) * M.values
    m0[-1] = 0.0
    m1 = cumtrapz(M.values, g.step)
    return (SampledFunction(g, m0), SampledFunction(g, m1),
            SampledFunction(g, m0 - m1))


def half_grid(values: np.ndarray) -> np.ndarray:
    """Values on the grid of step h/2 (length 2n + 1), midpoints interpolated."""
    out = np.empty(2 * values.size - 1, dtype=complex)
    out[0::2] = values
    out[1::2] = 0.5 * (values[1:] + values[:-1])
    return out


def at_half_index(values: np.ndarray, m: np.ndarray | int) -> np.ndarray:
    """Evaluate at x = m h / 2 for integer ``m`` in [0, 2n]."""
    return half_grid(values)[m]
