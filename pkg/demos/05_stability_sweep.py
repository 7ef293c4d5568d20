"""How much does the recovered kernel move when the data move?

Perturb the eigenvalue remainders (and optionally q) by eps, invert, and
compare with the unperturbed inversion in the weighted norm. The ratio
||M - M~|| / eps should settle to a constant as eps shrinks.
"""
import numpy as np

from slconv import Grid, SampledFunction, stability_sweep
from slconv.stability_lab import records_to_csv, spread, theorem1_comparison

g = Grid(400)
q = SampledFunction.from_callable(g, np.cos)
M = SampledFunction.from_callable(g, lambda x: 0.2 * np.cos(x))
eps = [1e-3, 3e-3, 1e-2, 3e-2]

for mixed in (False, True):
    recs = stability_sweep(q, M, 40, eps, mixed=mixed, seed=1, csv_path=f"stability_{'mixed' if mixed else 'kappa'}.csv")
    print("mixed" if mixed else "kappa only", " spread", round(spread(recs), 4))
    print(records_to_csv(recs))
    cmp = theorem1_comparison(recs, g)
    for r, c in zip(recs[1:], cmp[1:]):
        print(f"  eps {r.eps_kappa:.0e}: |M0|_1 + |M1|_1 + |Q| = {c.total:.3e}, |M0| = {c.m0_l2:.3e}")
