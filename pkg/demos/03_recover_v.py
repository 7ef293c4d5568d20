"""From eigenvalues to the function v(x) by the cosine series of k^2 Delta(k^2).

Delta is rebuilt from its zeros: the first K explicitly, the rest through the
closed form of the unperturbed tail. For data produced by the forward solver,
v must satisfy -v(pi - x) = R(pi, x; q, M).
"""
import numpy as np

from slconv import Grid, ProductDelta, SampledFunction, compute_R, eigenvalues, mean_check, recover_v, solve_P
from slconv.charfield import b_constant, v_coefficients
from slconv.forward import Spectrum
from slconv.numgrid import l2

g = Grid(400)
q = SampledFunction.from_callable(g, np.cos)
M = SampledFunction.from_callable(g, lambda x: 0.2 * np.cos(x))

# the constant (-1)^(k+1) pi/2 from the unperturbed spectrum
pd0 = ProductDelta(Spectrum(np.arange(1, 21) ** 2.0, 0.0))
print("b_k for k = 1..6:", np.array([b_constant(pd0, k) for k in range(1, 7)]).real.round(12))

for K in (10, 20, 40):
    sp = eigenvalues(q, M, K)
    pd = ProductDelta(sp)
    v = recover_v(pd, K, g)
    ref = -compute_R(solve_P(q, M), q, M).values[::-1]
    print(f"K = {K:2d}: ||v - v_kernel|| = {l2(v.values - ref, g):.2e}, mean residual {mean_check(v, sp.omega):.1e}")

c = v_coefficients(pd, 40)
print("coefficient magnitudes k = 1, 5, 10, 20, 40:", np.abs(c[[0, 4, 9, 19, 39]]).round(8))
