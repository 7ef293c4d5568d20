"""Transformation-operator kernels and their derived fields.

``solve_P`` computes the kernel P(x, t; q, M) that maps the free sine solution
to S(x, lambda). ``solve_F`` computes the three-variable kernel that makes the
difference P(.; q, M) - P(.; q, M~) an exact integral against M - M~, and
``compute_Phi`` its x-derivative on the line of first argument pi.

The integral equations couple a value at level t only to values at smaller
second arguments, so they are solved by a single march over t (see
:mod:`slconv._lattice`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _lattice
from .numgrid import Grid, SampledFunction, cumtrapz, half_grid


class IterationError(RuntimeError):
    """Successive approximations failed to converge."""

    def __init__(self, message, last_increment=float("nan")):
        super().__init__(message)
        self.last_increment = last_increment


@dataclass(frozen=True)
class TriangleField:
    """Samples on 0 <= t <= x <= pi; ``values[i, j]`` is zero for j > i."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    # lattice solution and source, kept for derivative evaluation
    lattice: np.ndarray | None = field(default=None, repr=False, compare=False)
    source: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __call__(self, i: int, j: int) -> complex:
        return self.values[i, j]


@dataclass(frozen=True)
class PyramidField:
    """Samples on 0 <= tau <= t <= x <= pi; ``values[i, j, k]`` (x, t, tau)."""

    grid: Grid
    values: np.ndarray = field(repr=False)


def _check_same_grid(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise ValueError("all inputs must live on the same grid")
    return g


def _triangle_from_lattice(grid, W):
    n = grid.panels
    i, j = np.tril_indices(n + 1)
    vals = np.zeros((n + 1, n + 1), dtype=complex)
    vals[i, j] = W[2 * i - j, j]
    return vals


def _solve_lattice(q, M, bmax=None):
    g = q.grid
    n, h = g.panels, g.step
    qf = half_grid(q.values)
    row0 = 0.5 * cumtrapz(qf, 0.5 * h)
    bmax = n if bmax is None else bmax
    W, S = _lattice.march(qf, np.ascontiguousarray(M.values), h, 0, bmax, row0,
                          np.ascontiguousarray(M.values),
                          np.zeros((1, 1), dtype=complex), False)
    return W, S


def solve_P(q: SampledFunction, M: SampledFunction, t_max: int | None = None) -> TriangleField:
    """Kernel P(x, t; q, M) on the grid triangle.

    With ``t_max`` the march stops at t = t_max h; values beyond stay zero.
    They depend only on M restricted to [0, t_max h].
    """
    grid = _check_same_grid(q, M)
    W, S = _solve_lattice(q, M, t_max)
    vals = _triangle_from_lattice(grid, W)
    if t_max is not None:
        vals[:, t_max + 1:] = 0.0
    return TriangleField(grid, vals, W, S)


def _r_parts(P: TriangleField, q: SampledFunction, M: SampledFunction, x_row: int,
             j_hi: int | None = None):
    """Split of R(x_row h, t) into boundary, M-source and integral parts."""
    grid = P.grid
    h = grid.step
    j_hi = x_row if j_hi is None else j_hi
    j = np.arange(j_hi + 1)
    qf = half_grid(q.values)
    x = x_row * h
    # -1/4 (q(x - t/2) + q(t/2))
    boundary = -0.25 * (qf[2 * x_row - j] + qf[j])
    m = M.values[: j_hi + 1]
    msrc = 0.5 * ((x - j * h) * m - cumtrapz(M.values, h)[: j_hi + 1])
    integral = _lattice.derivative_row(P.source, h, 0, x_row, 0, j_hi)
    return boundary, msrc, integral


def compute_R(P: TriangleField, q: SampledFunction, M: SampledFunction,
              x_row: int | None = None) -> SampledFunction:
    """R(x, t) = dP/dt along the row x = x_row h, from its explicit formula.

    Values for t > x are zero.
    """
    if P.source is None:
        raise ValueError("P must come from solve_P")
    grid = _check_same_grid(q, M)
    n = grid.panels
    x_row = n if x_row is None else x_row
    b, ms, it = _r_parts(P, q, M, x_row)
    out = np.zeros(n + 1, dtype=complex)
    out[: x_row + 1] = b + ms + it
    return SampledFunction(grid, out)


def solve_F(q: SampledFunction, M: SampledFunction, M_tilde: SampledFunction) -> PyramidField:
    """Linearization kernel F(x, t, tau; q, M, M~) on every grid triple."""
    grid = _check_same_grid(q, M, M_tilde)
    Wt, _ = _solve_lattice(q, M_tilde)
    vals = _lattice.pyramid(half_grid(q.values), np.ascontiguousarray(M.values), Wt, grid.step)
    return PyramidField(grid, vals)


def phi_block(q, M, M_tilde, t_lo, t_hi, x_hi, P_tilde: TriangleField | None = None):
    """Phi(x_i, t_c) for t_lo <= c <= t_hi and c <= i <= x_hi (array (n+1, n+1))."""
    grid = q.grid
    if P_tilde is None:
        Wt, _ = _solve_lattice(q, M_tilde)
    else:
        Wt = P_tilde.lattice
    return _lattice.phi_slices(half_grid(q.values), np.ascontiguousarray(M.values), Wt,
                               grid.step, t_lo, t_hi, x_hi)


def compute_Phi(q: SampledFunction, M: SampledFunction, M_tilde: SampledFunction) -> TriangleField:
    """Phi(x, t) = d/dx F(pi, x, t; q, M, M~) on the whole triangle."""
    grid = _check_same_grid(q, M, M_tilde)
    n = grid.panels
    return TriangleField(grid, phi_block(q, M, M_tilde, 0, n, n))


def compute_Psi(Phi: TriangleField) -> TriangleField:
    """Psi(x, t) = (2 Phi + 1) / (pi - t); the column t = pi is left at zero."""
    g = Phi.grid
    t = g.nodes
    vals = np.zeros_like(Phi.values)
    vals[:, :-1] = (2 * Phi.values[:, :-1] + 1) / (np.pi - t[:-1])
    vals[np.triu_indices(g.panels + 1, 1)] = 0.0
    return TriangleField(g, vals)


@dataclass(frozen=True)
class SABoundReport:
    """Worst ratio |F_k| / (F0 (C t)^k / k!) per successive-approximation term."""

    ratios: tuple
    F0: float
    C: float

    @property
    def worst(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


def sa_bound_check(q: SampledFunction, M: SampledFunction, depth: int) -> SABoundReport:
    """Check the factorial majorant of successive approximations for P.

    Term k + 1 is the integral operator applied to term k with zero boundary
    data; term 0 is the free term of the P equation.
    """
    if depth < 0 or depth > 60:
        raise ValueError("depth must lie in [0, 60]")
    grid = _check_same_grid(q, M)
    n, h = grid.panels, grid.step
    qf = half_grid(q.values)
    x = grid.nodes
    m = np.ascontiguousarray(M.values)
    C = float(np.sum(grid.weights() * np.abs(q.values))
              + 0.75 * np.sum(grid.weights() * (np.pi - x) * np.abs(M.values)))
    # free term on the lattice: 1/2 int_{t/2}^{x - t/2} q + 1/2 (x - t) int_0^t M
    a, b = np.meshgrid(np.arange(2 * n + 1), np.arange(n + 1), indexing="ij")
    Q = cumtrapz(qf, 0.5 * h)
    IM = cumtrapz(M.values, h)
    valid = (a >= b) & (a + b <= 2 * n)
    term = np.zeros((2 * n + 1, n + 1), dtype=complex)
    term[valid] = 0.5 * (Q[a[valid]] - Q[b[valid]]) + 0.25 * (a[valid] - b[valid]) * h * IM[b[valid]]
    F0 = float(np.max(np.abs(term)))
    ratios = []
    zero_row = np.zeros(2 * n + 1, dtype=complex)
    zero_src = np.zeros(n + 1, dtype=complex)
    tvals = b * h
    for k in range(1, depth + 1):
        # source of the next term: q * term + N[term]; fed in as an extra source
        src = _source_of(term, qf, m, h)
        term, _ = _lattice.march(np.zeros_like(qf), np.zeros_like(m), h, 0, n, zero_row,
                                 zero_src, src, True)
        bound = F0 * (C * tvals) ** k / math.factorial(k)
        mask = valid & (b > 0) & (bound > 0)
        if F0 == 0.0 or not mask.any():
            ratios.append(0.0)
            continue
        ratios.append(float(np.max(np.abs(term[mask]) / bound[mask])))
    return SABoundReport(tuple(ratios), F0, C)


def _source_of(W, qf, m, h):
    n2, n1 = W.shape
    S = np.zeros_like(W)
    for b in range(n1):
        for a in range(b, n2 - b):
            acc = 0.0
            if b > 0:
                ks = np.arange(1, b)
                acc = (0.5 * m[0] * W[a, b] + 0.5 * m[b] * W[a - b, 0]
                       + np.sum(m[ks] * W[a - ks, b - ks]))
            S[a, b] = qf[a + b] * W[a, b] + h * acc
    return S
