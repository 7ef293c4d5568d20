"""The transformation kernel P(x, t) and the fields derived from it.

S(x, lambda) = sin(rho x)/rho + int_0^x P(x, t) sin(rho (x - t))/rho dt.
The script checks the boundary values of P, compares R = dP/dt from its
explicit formula with a finite difference, and verifies that the kernel F
turns P(q, M) - P(q, M~) into an exact integral against M - M~.
"""
import numpy as np

from slconv import Grid, SampledFunction, compute_Phi, compute_R, sa_bound_check, solve_F, solve_P
from slconv.numgrid import cumtrapz, trapz

g = Grid(128)
h = g.step
x = g.nodes
q = SampledFunction.from_callable(g, np.cos)
M = SampledFunction.from_callable(g, lambda x: 0.3 * np.sin(2 * x))
Mt = SampledFunction.from_callable(g, lambda x: 0.2 - 0.1 * x)

P = solve_P(q, M)
print("max |P(x, x)|              ", np.max(np.abs(np.diag(P.values))))
print("max |P(x, 0) - int_0^x q/2| ", np.max(np.abs(P.values[:, 0] - 0.5 * cumtrapz(q.values, h))))

R = compute_R(P, q, M).values
fd = (P.values[-1, 2:] - P.values[-1, :-2]) / (2 * h)
print("R(pi, t) vs finite difference: max gap", np.max(np.abs(R[1:-1] - fd)), " (h =", round(h, 4), ")")

F = solve_F(q, M, Mt).values
dP = P.values - solve_P(q, Mt).values
dm = (M - Mt).values
gap = max(abs(dP[i, j] - trapz(F[i, j, : j + 1] * dm[: j + 1], h))
          for i in range(0, 129, 8) for j in range(0, i + 1, 4))
print("linearization gap (sampled)  ", gap, " h^2 =", h * h)
print("F(x, t, t) - (x - t)/2       ", max(abs(F[i, j, j] - (x[i] - x[j]) / 2) for i in range(129) for j in range(i + 1)))

Phi = compute_Phi(q, M, Mt).values
print("Phi(pi/2, t) at a few t      ", Phi[64, [0, 16, 32, 48, 64]].real.round(4))

rep = sa_bound_check(q, M, 5)
print("successive approximations: |F_k| / majorant =", np.round(rep.ratios, 4), " C =", round(rep.C, 3))
