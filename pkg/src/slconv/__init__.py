"""Forward and inverse spectral problems for -y'' + q y + int_0^x M(x - t) y(t) dt
on (0, pi) with Dirichlet conditions."""

__version__ = "0.1.0"

from .numgrid import Grid, SampledFunction, WeightedNormReport, norms, quad_integrate, remark1_transforms
from .kernel_ops import (IterationError, PyramidField, TriangleField, compute_Phi, compute_Psi,
                         compute_R, sa_bound_check, solve_F, solve_P)
from .forward import RootLocalizationError, Spectrum, delta_direct, delta_via_kernel, eigenvalues, solve_S
from .charfield import ProductDelta, mean_check, product_delta, recover_v
from .inverse import (InconsistentDataError, InversionError, MainEqProblem, SolveTrace,
                      WeightedUnknown, apply_Dq, continuation_step, final_weighted_solve,
                      g_term, invert, local_contraction)
from .stability_lab import PerturbationSpec, StabilityRecord, perturb, stability_sweep, theorem1_comparison
