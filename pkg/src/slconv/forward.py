"""Forward problem: S(x, lambda), the characteristic function and eigenvalues.

The characteristic function is available by two independent discretizations:
``delta_direct`` marches the Volterra equation for S directly, while
``delta_via_kernel`` integrates the transformation kernel P against the free
sine solution.
"""

from __future__ import annotations

import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _lattice
from .kernel_ops import TriangleField
from .numgrid import Grid, SampledFunction, quad_integrate, trapz

TOL_ROOT = 1e-10
MAX_NEWTON = 40
PAIR_TOL = 1e-6


class RootLocalizationError(RuntimeError):
    """Newton failed for, or two indices collapsed onto, the eigenvalue ``index``."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Spectrum:
    """First K Dirichlet eigenvalues with the asymptotic shift omega.

    ``lambdas[n - 1]`` is the eigenvalue indexed by n, i.e. the zero nearest
    to n^2 + omega.
    """

    lambdas: np.ndarray = field(repr=False)
    omega: complex

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=complex).copy()
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("a spectrum needs at least one eigenvalue")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "omega", complex(self.omega))

    @property
    def count(self) -> int:
        return self.lambdas.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.count + 1)

    @property
    def remainders(self) -> np.ndarray:
        """kappa_n = lambda_n - n^2 - omega."""
        return self.lambdas - self.indices ** 2 - self.omega

    @classmethod
    def from_remainders(cls, kappa, omega) -> "Spectrum":
        kappa = np.asarray(kappa, dtype=complex)
        n = np.arange(1, kappa.size + 1)
        return cls(n ** 2 + omega + kappa, omega)


def omega_of(q: SampledFunction) -> complex:
    """omega = (1/pi) int_0^pi q."""
    return quad_integrate(q) / np.pi


def _arrays(q, M):
    if q.grid != M.grid:
        raise ValueError("q and M must live on the same grid")
    return np.ascontiguousarray(q.values), np.ascontiguousarray(M.values)


def solve_S(q: SampledFunction, M: SampledFunction, lam: complex) -> SampledFunction:
    """Solution of the Cauchy problem S(0) = 0, S'(0) = 1 on the grid."""
    qa, ma = _arrays(q, M)
    s = _lattice.volterra_s(qa, ma, complex(lam), q.grid.step)
    return SampledFunction(q.grid, s)


def delta_direct(q: SampledFunction, M: SampledFunction, lam: complex) -> complex:
    """Delta(lambda) = S(pi, lambda) from the Volterra march."""
    qa, ma = _arrays(q, M)
    return complex(_lattice.volterra_s(qa, ma, complex(lam), q.grid.step)[-1])


def _sinc_pi(rho, x):
    """sin(rho x) / rho with the rho -> 0 limit."""
    rho = np.asarray(rho, dtype=complex)
    small = np.abs(rho) < 1e-8
    safe = np.where(small, 1.0, rho)
    return np.where(small, x, np.sin(safe * x) / safe)


def delta_via_kernel(P: TriangleField, lam: complex) -> complex:
    """Delta(lambda) from the transformation kernel row at x = pi."""
    g = P.grid
    t = g.nodes
    rho = cmath.sqrt(complex(lam))
    free = complex(_sinc_pi(rho, np.pi))
    row = P.values[g.panels]
    return free + complex(trapz(row * _sinc_pi(rho, np.pi - t), g.step))


def _newton(f, lam0, index):
    lam = complex(lam0)
    val = f(lam)
    scale = abs(val)
    for _ in range(MAX_NEWTON):
        if abs(val) <= TOL_ROOT * scale:
            return lam
        d = max(1e-4, 1e-6 * abs(lam))
        deriv = (f(lam + d) - f(lam - d)) / (2 * d)
        if deriv == 0 or not np.isfinite(deriv):
            break
        step = val / deriv
        lam -= step
        val = f(lam)
        scale = max(scale, abs(val))
        # the residual test alone stalls when the start is already a root
        if abs(step) <= 1e-13 * max(1.0, abs(lam)):
            return lam
    raise RootLocalizationError(
        f"Newton did not converge for eigenvalue index {index}", index)


def eigenvalues(q: SampledFunction, M: SampledFunction, K: int,
                threads: int = 1) -> Spectrum:
    """First K eigenvalues by Newton from the asymptotic guesses n^2 + omega."""
    n_pan = q.grid.panels
    if K < 1 or K > n_pan // 4:
        raise ValueError(f"K must lie in [1, {n_pan // 4}] for a grid of {n_pan} panels")
    omega = omega_of(q)
    qa, ma = _arrays(q, M)
    h = q.grid.step

    def f(lam):
        return complex(_lattice.volterra_s(qa, ma, lam, h)[-1])

    def one(n):
        lam = _newton(f, n * n + omega, n)
        if not np.isfinite(lam):
            raise RootLocalizationError(f"non-finite eigenvalue at index {n}", n)
        return lam

    idx = range(1, K + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            lams = list(ex.map(one, idx))
    else:
        lams = [one(n) for n in idx]
    lams = np.array(lams)
    for i in range(K):
        for j in range(i + 1, K):
            if abs(lams[i] - lams[j]) < PAIR_TOL:
                raise RootLocalizationError(
                    f"indices {i + 1} and {j + 1} converged to the same zero", j + 1)
    return Spectrum(lams, omega)
