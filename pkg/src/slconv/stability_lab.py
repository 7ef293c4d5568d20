"""Perturbation sweeps measuring how the recovered kernel reacts to data noise.

Each row perturbs the eigenvalue remainders and/or the potential, inverts the
perturbed data and compares with the unperturbed inversion in the weighted
norm. Ratios of output to input deviations should stay bounded as the
perturbation shrinks.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .charfield import ProductDelta, recover_v
from .forward import Spectrum, eigenvalues, omega_of
from .inverse import invert
from .numgrid import SampledFunction, l1, l2, l2_weighted, remark1_transforms

SHAPES = ("single-mode", "random-decaying")
C1 = 1.0 / 3.0
C2 = 2.0 * math.sqrt(math.pi) + 3.0
CSV_COLUMNS = ("eps_kappa", "eps_q", "eps_total", "dv", "dm_weighted", "ratio", "ratio_v", "status")


@dataclass(frozen=True)
class PerturbationSpec:
    seed: int = 0
    eps_kappa: float = 0.0
    eps_q: float = 0.0
    shape: str = "random-decaying"
    mode: int = 3
    complex_valued: bool = False

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        if self.eps_kappa < 0 or self.eps_q < 0:
            raise ValueError("perturbation sizes must be nonnegative")


@dataclass
class StabilityRecord:
    eps_kappa: float
    eps_q: float
    eps_total: float
    dv: float
    dm_weighted: float
    ratio: float
    ratio_v: float
    status: str
    m_hat: np.ndarray | None = field(default=None, repr=False)


def unit_bump(grid):
    """Smooth bump with unit L2 norm, vanishing with its derivative at both ends."""
    x = grid.nodes
    b = np.sin(x) ** 2 * np.exp(-((x - 1.2) ** 2))
    return b / l2(b, grid)


def _direction(spec: PerturbationSpec, K: int) -> np.ndarray:
    if spec.shape == "single-mode":
        if not 1 <= spec.mode <= K:
            raise ValueError("perturbed mode outside the spectrum")
        d = np.zeros(K, dtype=complex)
        d[spec.mode - 1] = 1.0
        return d
    rng = np.random.default_rng(spec.seed)
    xi = rng.standard_normal(K).astype(complex)
    if spec.complex_valued:
        xi = xi + 1j * rng.standard_normal(K)
    d = xi / np.arange(1, K + 1)
    return d / np.linalg.norm(d)


def perturb(spectrum: Spectrum, q: SampledFunction, spec: PerturbationSpec):
    """Return ``(spectrum_tilde, q_tilde)``.

    kappa~ = kappa + eps_kappa d with |d| = 1 in l2, q~ = q + eps_q bump, and
    the eigenvalues are rebuilt as n^2 + omega~ + kappa~.
    """
    if spec.eps_kappa == 0 and spec.eps_q == 0:
        return spectrum, q
    kappa = spectrum.remainders
    if spec.eps_kappa > 0:
        kappa = kappa + spec.eps_kappa * _direction(spec, spectrum.count)
    qt = q
    if spec.eps_q > 0:
        qt = q + spec.eps_q * unit_bump(q.grid)
    return Spectrum.from_remainders(kappa, omega_of(qt)), qt


def _norm_or_nan(num, den):
    return num / den if den > 0 else float("nan")


def _row(base, spectrum, q, spec, Kv):
    M0, v0 = base
    g = q.grid
    st, qt = perturb(spectrum, q, spec)
    dk = float(np.linalg.norm(st.remainders - spectrum.remainders))
    dq = l2((qt - q).values, g)
    total = dk + dq
    vt = recover_v(ProductDelta(st, omega_of(qt)), Kv, g)
    dv = l2(vt.values - v0.values, g)
    try:
        Mt, _ = invert(st, qt, Kv)
    except Exception as e:  # the sweep records failures and moves on
        return StabilityRecord(spec.eps_kappa, spec.eps_q, total, dv, float("nan"),
                               float("nan"), _norm_or_nan(dv, dk), f"failed:{type(e).__name__}")
    dm = l2_weighted(Mt.values - M0.values, g)
    return StabilityRecord(spec.eps_kappa, spec.eps_q, total, dv, dm,
                           _norm_or_nan(dm, total), _norm_or_nan(dv, dk), "ok",
                           Mt.values - M0.values)


def stability_sweep(q: SampledFunction, M: SampledFunction, K: int, eps_list,
                    shape: str = "random-decaying", mixed: bool = False, seed: int = 0,
                    threads: int = 1, csv_path=None, spectrum: Spectrum | None = None,
                    mode: int = 3, complex_valued: bool = False):
    """Sweep perturbation sizes; an unperturbed row is always included.

    With ``mixed`` the potential is perturbed by the same size as the
    remainders. Rows come back sorted by eps_total.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or eps_list != sorted(eps_list):
        raise ValueError("eps_list must be positive and ascending")
    g = q.grid
    Kv = min(K, g.panels // 2)
    spectrum = eigenvalues(q, M, K) if spectrum is None else spectrum
    M0, _ = invert(spectrum, q, Kv)
    v0 = recover_v(ProductDelta(spectrum, omega_of(q)), Kv, g)
    specs = [PerturbationSpec(seed, 0.0, 0.0, shape, mode, complex_valued)]
    specs += [PerturbationSpec(seed, e, e if mixed else 0.0, shape, mode, complex_valued)
              for e in eps_list]

    def work(spec):
        return _row((M0, v0), spectrum, q, spec, Kv)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            records = list(ex.map(work, specs))
    else:
        records = [work(s) for s in specs]
    records.sort(key=lambda r: r.eps_total)
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(records_to_csv(records))
    return records


def _fmt(x):
    if isinstance(x, str):
        return x
    return "nan" if math.isnan(x) else f"{x:.12e}"


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


@dataclass(frozen=True)
class NormComparison:
    m0_l2: float
    m0_l1: float
    m1_l1: float
    q_l2: float
    lower_ok: bool
    upper_ok: bool
    m1_below_m0: bool

    @property
    def total(self) -> float:
        return self.m0_l1 + self.m1_l1 + self.q_l2

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.m1_below_m0


def compare_norms(m_hat: SampledFunction, slack: float = 0.02) -> NormComparison:
    """Two-sided equivalence C1 |M0| <= |M0|_1 + |M1|_1 + |Q| <= C2 |M0|."""
    g = m_hat.grid
    M0, M1, Q = remark1_transforms(m_hat)
    a = l2(M0.values, g)
    b0, b1, c = l1(M0.values, g), l1(M1.values, g), l2(Q.values, g)
    s = b0 + b1 + c
    return NormComparison(a, b0, b1, c, C1 * a <= s * (1 + slack),
                          s <= C2 * a * (1 + slack), b1 <= b0 * (1 + slack))


def theorem1_comparison(records, grid, slack: float = 0.02):
    """Norm comparison for every successful row; failed rows map to None."""
    out = []
    for r in records:
        if r.m_hat is None:
            out.append(None)
            continue
        out.append(compare_norms(SampledFunction(grid, r.m_hat), slack))
    return out


def spread(records) -> float:
    """max / min of the finite ratios over rows with eps_total > 0."""
    vals = [r.ratio for r in records if r.eps_total > 0 and math.isfinite(r.ratio)]
    if not vals:
        return float("nan")
    return max(vals) / min(vals)
