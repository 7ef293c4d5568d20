"""Characteristic function rebuilt from a spectrum, and the kernel v(x).

The infinite product over all zeros is split into the first K known zeros and
a tail modeled by the asymptotic values n^2 + omega. The tail has the closed
form sin(pi mu) / mu with mu = sqrt(lambda - omega), so only the K ratio factors
(lambda_n - lambda) / (n^2 + omega - lambda) are evaluated explicitly.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .forward import Spectrum
from .numgrid import Grid, SampledFunction, quad_integrate

# below this distance a ratio denominator is treated as zero
POLE_TOL = 1e-9


@dataclass(frozen=True)
class ProductDelta:
    """Delta(lambda) represented through its zeros.

    ``omega`` defaults to the value stored with the spectrum; pass the one
    computed from q when it is known.
    """

    spectrum: Spectrum
    omega: complex | None = None

    def __post_init__(self):
        om = self.spectrum.omega if self.omega is None else self.omega
        object.__setattr__(self, "omega", complex(om))

    @property
    def tail_order(self) -> int:
        return self.spectrum.count

    def __call__(self, lam):
        return product_delta(self, lam)


def _sine_tail(mu):
    """sin(pi mu) / mu, equal to pi at mu = 0."""
    if abs(mu) < 1e-6:
        return np.pi * (1 - (np.pi * mu) ** 2 / 6)
    return cmath.sin(np.pi * mu) / mu


def _pole_limit(n):
    """lim (sin(pi mu)/mu) / (n^2 - mu^2) as mu -> n."""
    return np.pi * (-1) ** (n + 1) / (2.0 * n * n)


def _product(pd: ProductDelta, lam: complex, skip: int | None):
    lam = complex(lam)
    om = pd.omega
    lams = pd.spectrum.lambdas
    n = pd.spectrum.indices
    den = n * n + om - lam
    hit = np.flatnonzero(np.abs(den) < POLE_TOL)
    num = lams - lam
    if skip is not None:
        num = num.copy()
        num[skip - 1] = 1.0
    if hit.size:
        k = int(hit[0])
        mask = np.ones(n.size, dtype=bool)
        mask[k] = False
        rest = np.prod(num[mask] / den[mask])
        return complex(rest * num[k] * _pole_limit(k + 1))
    return complex(np.prod(num / den) * _sine_tail(cmath.sqrt(lam - om)))


def product_delta(pd: ProductDelta, lam: complex) -> complex:
    """Delta(lambda) from the first K zeros and the closed-form tail."""
    return _product(pd, lam, None)


def deflated_delta(pd: ProductDelta, lam: complex, k: int) -> complex:
    """Delta(lambda) / (lambda_k - lambda), with the zero lambda_k removed."""
    if not 1 <= k <= pd.tail_order:
        raise ValueError(f"k must lie in [1, {pd.tail_order}]")
    return _product(pd, lam, k)


def b_constant(pd: ProductDelta, k: int) -> complex:
    """k^2 times the deflated product at lambda_k.

    For the unperturbed spectrum lambda_j = j^2 this equals
    pi prod_{j != k} (j^2 - k^2) / j^2 = (-1)^(k+1) pi / 2.
    """
    return k * k * deflated_delta(pd, pd.spectrum.lambdas[k - 1], k)


def v_coefficients(pd: ProductDelta, Kv: int) -> np.ndarray:
    """c_k = k^2 Delta(k^2) + (-1)^k omega pi / 2 for k = 1..Kv."""
    k = np.arange(1, Kv + 1)
    d = np.array([product_delta(pd, float(kk * kk)) for kk in k])
    return k * k * d + (-1.0) ** k * pd.omega * np.pi / 2


def recover_v(pd: ProductDelta, series_terms: int, grid: Grid) -> SampledFunction:
    """Partial cosine sum for v on the grid."""
    Kv = int(series_terms)
    if Kv < 1 or Kv > min(pd.tail_order, grid.panels // 2):
        raise ValueError(
            f"series_terms must lie in [1, {min(pd.tail_order, grid.panels // 2)}], got {Kv}")
    c = v_coefficients(pd, Kv)
    x = grid.nodes
    k = np.arange(1, Kv + 1)
    v = pd.omega / 2 + (2 / np.pi) * (np.cos(np.outer(x, k)) @ c)
    return SampledFunction(grid, v)


def mean_check(v: SampledFunction, omega: complex) -> float:
    """|int_0^pi v - omega pi / 2|."""
    return abs(quad_integrate(v) - omega * np.pi / 2)
