"""Numerical laboratory for Hausdorff operators: sharp norm constants, extremal
sweeps and the identities relating the operator, its adjoint, the Fourier
transform and the Hilbert transforms."""

__version__ = "0.1.0"

from .gridfn import GridFunction, GridSpec, fourier, inverse_fourier, lp_norm, sample
from .hausdorff import (LogRadialFunction, LogRadialGrid, QuadConfig, apply_adjoint,
                        apply_hausdorff, apply_separable_fast)
from .kernel import Kernel, MomentReport, make_named_kernel, moment, reflect, truncate_inner
from .report import CheckReport
from .transforms import hilbert_axis, multi_hilbert, poisson_extend, smooth_maximal, star_norm

__all__ = [
    "CheckReport", "GridFunction", "GridSpec", "Kernel", "LogRadialFunction", "LogRadialGrid",
    "MomentReport", "QuadConfig", "apply_adjoint", "apply_hausdorff", "apply_separable_fast",
    "fourier", "hilbert_axis", "inverse_fourier", "lp_norm", "make_named_kernel", "moment",
    "multi_hilbert", "poisson_extend", "reflect", "sample", "smooth_maximal", "star_norm",
    "truncate_inner",
]
