"""Eigenvalues of -y'' + q y + int_0^x M(x - t) y(t) dt = lambda y, y(0) = y(pi) = 0.

The characteristic function Delta(lambda) = S(pi, lambda) is computed twice,
once by marching the Volterra equation for S and once through the
transformation kernel, and its zeros are located by Newton's method.
"""
import time

import numpy as np

from slconv import Grid, SampledFunction, delta_direct, delta_via_kernel, eigenvalues, solve_P

g = Grid(400)
q = SampledFunction.from_callable(g, np.cos)
M = SampledFunction.from_callable(g, lambda x: 0.2 * np.cos(x))

# two independent routes to Delta
P = solve_P(q, M)
for lam in (0.5, 10.0, 37.3, 99.0):
    a, b = delta_direct(q, M, lam), delta_via_kernel(P, lam)
    print(f"lambda = {lam:6.2f}   direct {a.real:+.8f}   kernel {b.real:+.8f}   gap {abs(a - b):.1e}")

t0 = time.perf_counter()
sp = eigenvalues(q, M, 40)
print(f"\n40 eigenvalues in {time.perf_counter() - t0:.2f} s, omega = {sp.omega.real:.2e}")
print(" n   lambda_n          kappa_n")
for n, lam, kap in zip(sp.indices[:8], sp.lambdas[:8], sp.remainders[:8]):
    print(f"{n:2d}   {lam.real:14.8f}   {kap.real:+.3e}")
print("...")
print(f"|kappa_n| on the last five: {np.abs(sp.remainders[-5:]).round(6)}")

# a dense matrix discretization as a sanity check (plain second differences, O(h^2))
N = 600
h = np.pi / N
x = np.arange(1, N) * h
A = (2 * np.eye(N - 1) - np.eye(N - 1, k=1) - np.eye(N - 1, k=-1)) / h ** 2 + np.diag(np.cos(x))
i, j = np.tril_indices(N - 1)
C = np.zeros((N - 1, N - 1))
C[i, j] = h * 0.2 * np.cos((i - j) * h)
C[np.diag_indices(N - 1)] *= 0.5
ev = np.sort(np.linalg.eigvals(A + C).real)[:5]
print("\nmatrix check, first five:", ev.round(4), "vs", sp.lambdas[:5].real.round(4))
