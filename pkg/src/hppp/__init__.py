"""Halpern-anchored and relaxed preconditioned proximal point methods.

Submodules
----------
fixedpoint
    Iteration drivers, step-size schedules and run traces.
operators
    Primal-dual points, the preconditioner ``M`` and Chambolle-Pock steps.
prox
    Closed-form resolvents for deblurring, inpainting and the TV dual.
imaging
    Finite differences, blur kernels, masks, noise, PSNR and PGM I/O.
grared
    Denoisers and the denoiser-driven primal-dual algorithms.
toy
    A 1D saddle problem with a closed-form solution set.
restore
    End-to-end restoration presets.
"""

from .fixedpoint import (
    ANCHOR, RELAXATION, DivergenceError, RateFitError, RunTrace, Schedule, TraceRow, hppp_iterate,
    ppp_iterate, rate_fit,
)
from .operators import (
    LinearOperator, PrimalDualPoint, Preconditioner, SaddleProblem, cp_step, cp_step_anchored, make_T,
    seminorm_M,
)

__version__ = "0.1.0"

__all__ = [
    "ANCHOR", "RELAXATION", "DivergenceError", "RateFitError", "RunTrace", "Schedule", "TraceRow",
    "hppp_iterate", "ppp_iterate", "rate_fit", "LinearOperator", "PrimalDualPoint", "Preconditioner",
    "SaddleProblem", "cp_step", "cp_step_anchored", "make_T", "seminorm_M", "__version__",
]
