import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slconv.forward import Spectrum, eigenvalues
from slconv.numgrid import Grid, SampledFunction, l2
from slconv.stability_lab import (C1, C2, CSV_COLUMNS, PerturbationSpec, compare_norms,
                                  perturb, records_to_csv, spread, stability_sweep,
                                  theorem1_comparison, unit_bump)
from conftest import cos_pair, sample


@pytest.fixture(scope="module")
def base():
    g, q, M = cos_pair(128)
    return g, q, M, eigenvalues(q, M, 24)


def test_zero_perturbation_is_identity(base):
    g, q, M, sp = base
    st_, qt = perturb(sp, q, PerturbationSpec(eps_kappa=0, eps_q=0))
    assert st_ is sp and qt is q


def test_single_mode(base):
    g, q, M, sp = base
    st_, qt = perturb(sp, q, PerturbationSpec(eps_kappa=1e-2, shape="single-mode", mode=3))
    d = st_.remainders - sp.remainders
    assert abs(d[2] - 1e-2) < 1e-12
    assert np.max(np.abs(np.delete(d, 2))) < 1e-12


@pytest.mark.parametrize("complex_valued", [False, True])
def test_random_decaying_norm_and_reproducibility(base, complex_valued):
    g, q, M, sp = base
    spec = PerturbationSpec(seed=4, eps_kappa=3e-3, eps_q=2e-3, complex_valued=complex_valued)
    a, qa = perturb(sp, q, spec)
    b, qb = perturb(sp, q, spec)
    assert np.array_equal(a.lambdas, b.lambdas) and np.array_equal(qa.values, qb.values)
    assert abs(np.linalg.norm(a.remainders - sp.remainders) - 3e-3) < 1e-10
    assert abs(l2((qa - q).values, g) - 2e-3) < 1e-10
    # lambda~ = n^2 + omega~ + kappa~ with omega~ from q~
    assert a.omega != sp.omega
    n = np.arange(1, sp.count + 1)
    assert np.allclose(a.lambdas, n ** 2 + a.omega + a.remainders, atol=1e-12)


def test_bump_is_unit():
    g = Grid(200)
    assert abs(l2(unit_bump(g), g) - 1) < 1e-12


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(shape="triangle")
    with pytest.raises(ValueError):
        PerturbationSpec(eps_kappa=-1.0)


def test_sweep_small(base, tmp_path):
    g, q, M, sp = base
    path = tmp_path / "s.csv"
    recs = stability_sweep(q, M, 24, [1e-3, 1e-2], seed=2, csv_path=path, spectrum=sp)
    assert [r.eps_total for r in recs] == sorted(r.eps_total for r in recs)
    assert recs[0].eps_total == 0 and recs[0].dm_weighted == 0
    assert all(r.status == "ok" for r in recs)
    assert spread(recs) <= 3
    assert all(math.isfinite(r.ratio) and r.ratio <= 100 for r in recs[1:])
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "\r" not in text
    assert text == records_to_csv(recs)
    cmp = theorem1_comparison(recs, g)
    assert all(c.ok for c in cmp)
    assert cmp[0].total == 0


def test_sweep_records_failures(base, monkeypatch):
    import slconv.stability_lab as sl
    g, q, M, sp = base
    real = sl.invert
    calls = {"n": 0}

    def flaky(spectrum, qq, Kv=None):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("boom")
        return real(spectrum, qq, Kv)

    monkeypatch.setattr(sl, "invert", flaky)
    recs = stability_sweep(q, M, 24, [1e-3, 1e-2], spectrum=sp)
    assert sum(r.status != "ok" for r in recs) == 1
    assert "nan" in records_to_csv(recs)


def test_sweep_rejects_bad_eps(base):
    g, q, M, sp = base
    with pytest.raises(ValueError):
        stability_sweep(q, M, 24, [1e-2, 1e-3], spectrum=sp)


def test_norm_equivalence_random_samples():
    g = Grid(400)
    rng = np.random.default_rng(12)
    x = g.nodes
    for _ in range(100):
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        k = np.arange(8)
        m = np.cos(np.outer(x, k)) @ a + np.sin(np.outer(x, k)) @ b
        c = compare_norms(SampledFunction(g, m))
        assert c.ok, c


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5), st.floats(-0.9, 0.9))
def test_norm_equivalence_property(coef, p):
    g = Grid(200)
    x = g.nodes
    m = sum(c * np.cos(k * x) for k, c in enumerate(coef)) * (np.pi - x + 0.1) ** p
    if np.max(np.abs(m)) < 1e-6:
        return
    c = compare_norms(SampledFunction(g, m))
    assert C1 * c.m0_l2 <= c.total * 1.02 and c.total <= C2 * c.m0_l2 * 1.02
    assert c.m1_below_m0
