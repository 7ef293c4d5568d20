"""Recovery of the convolution kernel M from v and q.

The main equation -v(pi - x) = R(pi, x; q, M) is solved in three stages:

1. fixed-point iteration M <- g + D_q M on a short interval (0, delta0),
2. doubling continuation a -> 2a up to pi/2; on each block the kernel depends
   linearly on the new piece of M, which is found from a Volterra equation
   with kernel Phi,
3. one weighted solve on (pi/2, pi) for h = (pi - x) M, after the change of
   unknown z = h - int_0^x h / (pi - t), which removes the degenerate factor
   (pi - x) / 2 in front of the unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel_ops
from .charfield import ProductDelta, mean_check, recover_v
from .forward import Spectrum, omega_of
from .kernel_ops import IterationError
from .numgrid import Grid, SampledFunction, cumtrapz, half_grid, l2, quad_integrate

TOL_FIX = 1e-8
MAX_FIX = 50
MAX_CORRECT = 20


class InconsistentDataError(ValueError):
    """The spectrum and the potential cannot come from one operator."""


class InversionError(RuntimeError):
    """A stage of the inversion failed; ``stage`` names it."""

    def __init__(self, message, stage, trace=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.trace = trace


class ContractionError(IterationError):
    """Fixed-point increments kept growing."""


def tol_mean(q: SampledFunction) -> float:
    return 1e-2 * (1 + l2(q.values, q.grid))


def tol_main(v: SampledFunction) -> float:
    return 1e-3 * (1 + l2(v.values, v.grid))


@dataclass(frozen=True)
class MainEqProblem:
    """Data of the main equation: q and v on one grid."""

    q: SampledFunction
    v: SampledFunction

    def __post_init__(self):
        if self.q.grid != self.v.grid:
            raise ValueError("q and v must live on the same grid")
        gap = abs(quad_integrate(self.v) - 0.5 * quad_integrate(self.q))
        if gap > tol_mean(self.q):
            raise InconsistentDataError(
                f"mean condition violated: |int v - int q / 2| = {gap:.3e}")

    @property
    def grid(self) -> Grid:
        return self.q.grid


@dataclass
class SolveTrace:
    """Block-by-block record of an inversion."""

    blocks: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    final_residual: float = float("nan")
    mean_residual: float = float("nan")
    z_mean: float = float("nan")
    delta0: float = float("nan")

    def record(self, stage, lo, hi, iters, resid):
        self.stages.append(stage)
        self.blocks.append((lo, hi))
        self.iterations.append(int(iters))
        self.residuals.append(float(resid))

    def as_dict(self) -> dict:
        return {
            "delta0": self.delta0,
            "blocks": [[float(a), float(b)] for a, b in self.blocks],
            "stages": list(self.stages),
            "iterations": list(self.iterations),
            "residuals": list(self.residuals),
            "final_residual": self.final_residual,
            "mean_residual": self.mean_residual,
            "z_mean": self.z_mean,
        }


@dataclass(frozen=True)
class WeightedUnknown:
    """h = (pi - x) M together with z = h - int_0^x h / (pi - t)."""

    h: SampledFunction
    z: SampledFunction

    @classmethod
    def from_h(cls, h: SampledFunction) -> "WeightedUnknown":
        return cls(h, SampledFunction(h.grid, h_to_z(h.values, h.grid)))

    @classmethod
    def from_z(cls, z: SampledFunction) -> "WeightedUnknown":
        return cls(SampledFunction(z.grid, z_to_h(z.values, z.grid)), z)


def _over_distance(f, grid):
    """f / (pi - x); the node x = pi gets the linear extrapolation."""
    out = np.zeros(grid.panels + 1, dtype=complex)
    out[:-1] = f[:-1] / (np.pi - grid.nodes[:-1])
    out[-1] = 2 * out[-2] - out[-3]
    return out


def h_to_z(h: np.ndarray, grid: Grid) -> np.ndarray:
    return h - cumtrapz(_over_distance(h, grid), grid.step)


def z_to_h(z: np.ndarray, grid: Grid) -> np.ndarray:
    """h = z + (1 / (pi - x)) int_0^x z; zero at x = pi."""
    out = np.zeros_like(z, dtype=complex)
    out[:-1] = z[:-1] + cumtrapz(z, grid.step)[:-1] / (np.pi - grid.nodes[:-1])
    return out


def z_to_h_zero_mean(z: np.ndarray, grid: Grid) -> np.ndarray:
    """h = z - (1 / (pi - x)) int_x^pi z, valid when int_0^pi z = 0."""
    c = cumtrapz(z, grid.step)
    out = np.zeros_like(z, dtype=complex)
    out[:-1] = z[:-1] - (c[-1] - c[:-1]) / (np.pi - grid.nodes[:-1])
    return out


def g_term(q: SampledFunction, v: SampledFunction) -> SampledFunction:
    """Free term g(x) of the fixed-point form; zero at x = pi."""
    g = q.grid
    n = g.panels
    i = np.arange(n)
    qf = half_grid(q.values)
    num = 0.5 * (qf[2 * n - i] + qf[i]) - 2 * v.values[n - i]
    out = np.zeros(n + 1, dtype=complex)
    out[:n] = num / (np.pi - g.nodes[:n])
    return SampledFunction(g, out)


def _line_part(q, M, t_max=None):
    """Integral part of R(pi, t) for t up to t_max (default: whole row)."""
    P = kernel_ops.solve_P(q, M, t_max)
    j_hi = q.grid.panels if t_max is None else t_max
    _, _, it = kernel_ops._r_parts(P, q, M, q.grid.panels, j_hi)
    return it


def apply_Dq(M: SampledFunction, q: SampledFunction, t_max: int | None = None) -> SampledFunction:
    """(int_0^x M - 2 L(x)) / (pi - x), L the line-integral part of R(pi, x).

    With ``t_max`` only nodes up to t_max are evaluated (the rest are zero);
    they depend on M restricted to [0, t_max h] alone.
    """
    g = q.grid
    n = g.panels
    hi = n if t_max is None else t_max
    L = _line_part(q, M, t_max)
    IM = cumtrapz(M.values, g.step)[: hi + 1]
    out = np.zeros(n + 1, dtype=complex)
    top = min(hi, n - 1)
    out[: top + 1] = (IM[: top + 1] - 2 * L[: top + 1]) / (np.pi - g.nodes[: top + 1])
    return SampledFunction(g, out)


def main_residual(problem: MainEqProblem, M: SampledFunction, hi: int | None = None) -> np.ndarray:
    """r(x) = -v(pi - x) - R(pi, x; q, M) at nodes 0..hi."""
    g = problem.grid
    n = g.panels
    hi = n if hi is None else hi
    q = problem.q
    P = kernel_ops.solve_P(q, M, None if hi == n else hi)
    b, ms, it = kernel_ops._r_parts(P, q, M, n, hi)
    return -problem.v.values[n - np.arange(hi + 1)] - (b + ms + it)


def _restrict(M: SampledFunction, hi: int) -> SampledFunction:
    vals = M.values.copy()
    vals[hi + 1:] = 0.0
    return SampledFunction(M.grid, vals)


def local_contraction(problem: MainEqProblem, delta: int):
    """Fixed-point iteration on nodes 0..delta.

    Returns ``(M, iterations, increments)``; M is zero beyond node ``delta``.
    Raises :class:`ContractionError` when the increment grows three times in
    a row and :class:`IterationError` after MAX_FIX sweeps.
    """
    g = problem.grid
    if not 1 <= delta <= g.panels // 2:
        raise ValueError("delta must be a node index in [1, n/2]")
    w = g.weights()[: delta + 1].copy()
    w[-1] = 0.5 * g.step

    def norm(f):
        return math.sqrt(float(np.sum(w * np.abs(f[: delta + 1]) ** 2)))

    gt = _restrict(g_term(problem.q, problem.v), delta)
    M = gt
    incs = []
    growth = 0
    for k in range(1, MAX_FIX + 1):
        new = _restrict(gt + apply_Dq(M, problem.q, delta), delta)
        inc = norm(new.values - M.values)
        scale = max(norm(new.values), 1e-300)
        M = new
        incs.append(inc)
        if inc <= TOL_FIX * scale or inc == 0.0:
            return M, k, incs
        if len(incs) > 1 and inc > incs[-2]:
            growth += 1
            if growth >= 3:
                raise ContractionError(
                    f"increments grew three times in a row on (0, {delta * g.step:.4f})", inc)
        else:
            growth = 0
    raise IterationError(f"no convergence in {MAX_FIX} sweeps", incs[-1])


def _march_block(Phi, rhs, grid, a, b):
    """Solve (pi - x_i)/2 u_i + h sum_j w_j Phi[i, j] u_j = rhs_i, u_a = 0, a < i <= b."""
    h = grid.step
    x = grid.nodes
    u = np.zeros(grid.panels + 1, dtype=complex)
    for i in range(a + 1, b + 1):
        acc = np.dot(Phi[i, a + 1:i], u[a + 1:i])
        diag = 0.5 * (np.pi - x[i]) + 0.5 * h * Phi[i, i]
        if abs(diag) < 1e-12:
            raise IterationError(f"degenerate diagonal at node {i}")
        u[i] = (rhs[i] - h * acc) / diag
    return u


def continuation_step(problem: MainEqProblem, M_prev: SampledFunction, a: int, b: int):
    """Extend a solution on nodes 0..a to nodes 0..b, with b - a <= a.

    Returns ``(M, corrections, residual)``.
    """
    g = problem.grid
    n = g.panels
    if not (0 < a < b <= n // 2 and b - a <= a):
        raise ValueError("need 0 < a < b <= n/2 and b - a <= a")
    M1 = _restrict(M_prev, a)
    Phi = kernel_ops.phi_block(problem.q, M1, M1, a, b, b)
    tol = 10 * g.step ** 2 + TOL_FIX
    M = M1
    r = main_residual(problem, M, b)
    resid = float(np.max(np.abs(r[a + 1:b + 1])))
    for k in range(MAX_CORRECT):
        if resid <= 1e-3 * tol:
            break
        M = M + _march_block(Phi, r, g, a, b)
        r = main_residual(problem, M, b)
        new = float(np.max(np.abs(r[a + 1:b + 1])))
        if new >= resid:
            resid = new
            break
        resid = new
    else:
        k = MAX_CORRECT
    if resid > tol:
        raise IterationError(f"block ({a * g.step:.4f}, {b * g.step:.4f}] residual {resid:.3e}", resid)
    return M, k + 1, resid


def theta_kernel(Phi: np.ndarray, grid: Grid, lo: int) -> np.ndarray:
    """Theta(x, t) = Psi(x, t) + int_t^x Psi(x, s) / (pi - s) ds for lo <= t <= x < n."""
    n = grid.panels
    h = grid.step
    x = grid.nodes
    Psi = np.zeros_like(Phi)
    Psi[:n, :n] = (2 * Phi[:n, :n] + 1) / (np.pi - x[:n])
    Psi[np.triu_indices(n + 1, 1)] = 0.0
    Theta = np.zeros_like(Phi)
    for i in range(lo, n):
        f = Psi[i, lo:i + 1] / (np.pi - x[lo:i + 1])
        c = cumtrapz(f, h)
        Theta[i, lo:i + 1] = Psi[i, lo:i + 1] + (c[-1] - c)
    return Theta


def _march_weighted(Theta, rhs, grid, lo):
    """Solve z_i + h sum_j w_j Theta[i, j] z_j = rhs_i for lo < i < n, z_lo = 0."""
    n = grid.panels
    h = grid.step
    z = np.zeros(n + 1, dtype=complex)
    for i in range(lo + 1, n):
        acc = np.dot(Theta[i, lo + 1:i], z[lo + 1:i])
        z[i] = (rhs[i] - h * acc) / (1 + 0.5 * h * Theta[i, i])
    z[n] = 2 * z[n - 1] - z[n - 2]
    return z


def _weighted_update(Theta, r, grid, lo):
    n = grid.panels
    z = _march_weighted(Theta, 2 * r, grid, lo)
    zmean = abs(cumtrapz(z, grid.step)[-1])
    hh = z_to_h_zero_mean(z, grid)
    du = np.zeros(n + 1, dtype=complex)
    du[lo + 1:n] = hh[lo + 1:n] / (np.pi - grid.nodes[lo + 1:n])
    return du, zmean


def final_weighted_solve(problem: MainEqProblem, M_prev: SampledFunction):
    """Extend a solution on (0, pi/2] to (0, pi) through the weighted unknown.

    Returns ``(M, corrections, residual, z_mean)``; M at x = pi is 0.
    """
    g = problem.grid
    n = g.panels
    lo = n // 2
    M1 = _restrict(M_prev, lo)
    Phi = kernel_ops.phi_block(problem.q, M1, M1, lo, n - 1, n - 1)
    Theta = theta_kernel(Phi, g, lo)
    r = main_residual(problem, M1)
    du, zmean = _weighted_update(Theta, r, g, lo)
    if zmean > 10 * tol_mean(problem.q):
        raise InconsistentDataError(f"weighted unknown has mean {zmean:.3e}")
    M = M1 + du
    resid = l2(main_residual(problem, M), g)
    k = 1
    target = 1e-2 * tol_main(problem.v)
    while k < MAX_CORRECT and resid > target:
        du, _ = _weighted_update(Theta, main_residual(problem, M), g, lo)
        trial = M + du
        new = l2(main_residual(problem, trial), g)
        if new >= resid:
            break
        M, resid = trial, new
        k += 1
    return M, k, resid, zmean


def solve_main(problem: MainEqProblem, trace: SolveTrace | None = None):
    """Run all three stages; returns ``(M, trace)``."""
    g = problem.grid
    n = g.panels
    trace = SolveTrace() if trace is None else trace
    h = g.step
    d = max(1, round(n / 8))
    d_min = max(1, math.floor(n / 64))
    while True:
        try:
            M, its, incs = local_contraction(problem, d)
            break
        except ContractionError as e:
            trace.record("contraction-retry", 0.0, d * h, MAX_FIX, e.last_increment)
            d //= 2
            if d < d_min:
                raise InversionError("no contraction above the smallest block", "contraction", trace)
        except IterationError as e:
            raise InversionError(str(e), "contraction", trace) from e
    trace.delta0 = d * h
    trace.record("contraction", 0.0, d * h, its, incs[-1])
    a = d
    while a < n // 2:
        b = min(2 * a, n // 2)
        try:
            M, its, res = continuation_step(problem, M, a, b)
        except IterationError as e:
            raise InversionError(str(e), "continuation", trace) from e
        trace.record("continuation", a * h, b * h, its, res)
        a = b
    try:
        M, its, res, zmean = final_weighted_solve(problem, M)
    except IterationError as e:
        raise InversionError(str(e), "weighted", trace) from e
    trace.z_mean = zmean
    trace.record("weighted", np.pi / 2, np.pi, its, res)
    trace.final_residual = res
    if res > tol_main(problem.v):
        raise InversionError(f"final residual {res:.3e} above {tol_main(problem.v):.3e}",
                             "weighted", trace)
    return M, trace


def check_asymptotics(spectrum: Spectrum, omega: complex, tol: float) -> float:
    """Median |kappa_n| over the upper half of the spectrum, with kappa from omega.

    A spectrum whose shift disagrees with the mean of q leaves a constant
    offset in kappa_n that does not decay.
    """
    n = spectrum.indices
    kappa = spectrum.lambdas - n ** 2 - omega
    tail = kappa[spectrum.count // 2:]
    off = float(np.median(np.abs(tail)))
    if off > tol:
        raise InconsistentDataError(
            f"eigenvalue remainders do not decay: median |kappa| = {off:.3e} on the upper half")
    return off


def invert(spectrum: Spectrum, q: SampledFunction, series_terms: int | None = None):
    """Recover M from K eigenvalues and q; returns ``(M, trace)``."""
    g = q.grid
    omega = omega_of(q)
    tm = tol_mean(q)
    check_asymptotics(spectrum, omega, tm)
    Kv = min(spectrum.count, g.panels // 2) if series_terms is None else series_terms
    v = recover_v(ProductDelta(spectrum, omega), Kv, g)
    trace = SolveTrace()
    trace.mean_residual = mean_check(v, omega)
    if trace.mean_residual > tm:
        raise InconsistentDataError(f"mean check failed: {trace.mean_residual:.3e}")
    return solve_main(MainEqProblem(q, v), trace)
