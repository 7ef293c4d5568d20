import numpy as np
import pytest

from slconv.forward import delta_via_kernel
from slconv.kernel_ops import (TriangleField, compute_Phi, compute_Psi, compute_R,
                               sa_bound_check, solve_F, solve_P)
from slconv.numgrid import Grid, SampledFunction, cumtrapz, quad_integrate, trapz
from conftest import sample


def smooth_random(grid, rng, scale=1.0, terms=4):
    x = grid.nodes
    a = rng.standard_normal(terms)
    vals = sum(a[k] * np.cos(k * x + a[k]) for k in range(terms)) / terms
    return SampledFunction(grid, scale * vals)


def test_zero_kernel():
    g = Grid(64)
    z = SampledFunction.zeros(g)
    P = solve_P(z, z)
    assert not np.any(P.values)
    assert not np.any(compute_R(P, z, z).values)


def test_constant_potential_through_representation():
    g = Grid(400)
    c = 0.8
    P = solve_P(sample(g, lambda x: c + 0 * x), SampledFunction.zeros(g))
    for lam in (1.0, 4.0, 9.0):
        mu = np.sqrt(lam - c)
        assert abs(delta_via_kernel(P, lam) - np.sin(np.pi * mu) / mu) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_boundary_identities(seed):
    g = Grid(200)
    h = g.step
    rng = np.random.default_rng(seed)
    q, M = smooth_random(g, rng), smooth_random(g, rng, 0.5)
    P = solve_P(q, M)
    d = np.arange(g.panels + 1)
    assert np.max(np.abs(P.values[d, d])) <= 5 * h * h
    half = 0.5 * cumtrapz(q.values, h)
    assert np.max(np.abs(P.values[:, 0] - half)) <= 5 * h * h


def test_triangle_is_lower():
    g = Grid(32)
    P = solve_P(sample(g, np.cos), sample(g, np.sin))
    assert not np.any(P.values[np.triu_indices(33, 1)])


def test_restriction_to_short_interval():
    g = Grid(128)
    q, M = sample(g, np.cos), sample(g, lambda x: 0.3 + np.sin(x))
    d = 40
    cut = SampledFunction(g, np.where(np.arange(129) <= d, M.values, 0.0))
    A = solve_P(q, M).values
    B = solve_P(q, cut).values
    assert np.array_equal(A[:, : d + 1], B[:, : d + 1])
    # and the truncated march agrees too
    C = solve_P(q, M, t_max=d).values
    assert np.array_equal(A[:, : d + 1], C[:, : d + 1])


def test_R_against_finite_difference():
    g = Grid(200)
    h = g.step
    z = SampledFunction.zeros(g)
    for q, M in [(z, sample(g, lambda x: 0.7 + 0 * x)),
                 (sample(g, np.cos), sample(g, lambda x: 0.2 * np.cos(x)))]:
        P = solve_P(q, M)
        R = compute_R(P, q, M).values
        row = P.values[-1]
        fd = (row[2:] - row[:-2]) / (2 * h)
        assert np.max(np.abs(fd - R[1:-1])) <= 10 * h


def test_R_leading_terms_small_m():
    g = Grid(200)
    t = g.nodes
    z = SampledFunction.zeros(g)
    for m in (1e-2, 2e-2):
        M = sample(g, lambda x: m + 0 * x)
        R = compute_R(solve_P(z, M), z, M).values
        lead = 0.5 * ((np.pi - t) * m - m * t)
        err = np.max(np.abs(R - lead))
        assert err <= 5 * m * m


def test_R_integral_identity():
    g = Grid(200)
    h = g.step
    q, M = sample(g, np.cos), sample(g, lambda x: 0.2 * np.cos(x))
    R = compute_R(solve_P(q, M), q, M)
    assert abs(quad_integrate(R) + 0.5 * quad_integrate(q)) <= 5 * h * h


def test_R_needs_solver_output():
    g = Grid(16)
    z = SampledFunction.zeros(g)
    with pytest.raises(ValueError):
        compute_R(TriangleField(g, np.zeros((17, 17))), z, z)


def test_F_zero_inputs():
    g = Grid(32)
    z = SampledFunction.zeros(g)
    F = solve_F(z, z, z).values
    x = g.nodes
    for i in range(33):
        for j in range(i + 1):
            assert np.allclose(F[i, j, : j + 1], (x[i] - x[j]) / 2, atol=1e-15)


def test_F_diagonal_and_linearization():
    g = Grid(64)
    h = g.step
    rng = np.random.default_rng(11)
    q = sample(g, np.cos)
    M, Mt = smooth_random(g, rng, 0.5), smooth_random(g, rng, 0.5)
    F = solve_F(q, M, Mt).values
    x = g.nodes
    n = g.panels
    diag = max(abs(F[i, j, j] - (x[i] - x[j]) / 2) for i in range(n + 1) for j in range(i + 1))
    assert diag <= 1e-12
    dP = solve_P(q, M).values - solve_P(q, Mt).values
    dm = (M - Mt).values
    worst = 0.0
    for i in range(n + 1):
        for j in range(i + 1):
            worst = max(worst, abs(dP[i, j] - trapz(F[i, j, : j + 1] * dm[: j + 1], h)))
    assert worst <= 10 * h * h


def test_Phi_zero_inputs():
    g = Grid(32)
    z = SampledFunction.zeros(g)
    Phi = compute_Phi(z, z, z)
    i, j = np.tril_indices(33)
    assert np.allclose(Phi.values[i, j], -0.5, atol=1e-15)
    assert not np.any(compute_Psi(Phi).values)


def test_Phi_against_finite_difference():
    g = Grid(64)
    h = g.step
    q, M, Mt = sample(g, np.cos), sample(g, lambda x: 0.3 * np.sin(2 * x)), sample(g, np.sin)
    F = solve_F(q, M, Mt).values[-1]
    Phi = compute_Phi(q, M, Mt).values
    worst = 0.0
    for k in range(65):
        for i in range(k + 1, 64):
            worst = max(worst, abs((F[i + 1, k] - F[i - 1, k]) / (2 * h) - Phi[i, k]))
    assert worst <= 10 * h


def test_sa_bound_zero():
    g = Grid(32)
    z = SampledFunction.zeros(g)
    assert sa_bound_check(z, z, 4).ratios == (0.0,) * 4


@pytest.mark.parametrize("qc,mc", [(1.0, 0.0), (0.0, 0.5), (1.0, 0.5)])
def test_sa_bound(qc, mc):
    g = Grid(64)
    r = sa_bound_check(sample(g, lambda x: qc + 0 * x), sample(g, lambda x: mc + 0 * x), 6)
    assert len(r.ratios) == 6
    assert r.worst <= 1.05


def test_sa_bound_depth_guard():
    g = Grid(16)
    z = SampledFunction.zeros(g)
    with pytest.raises(ValueError):
        sa_bound_check(z, z, 61)
