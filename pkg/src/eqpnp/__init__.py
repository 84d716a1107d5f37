"""Equivariant plug-and-play image reconstruction.

A small numpy library for solving linear inverse imaging problems with
denoiser-based iterative algorithms (forward-backward plug-and-play,
denoising-regularized gradient descent, unadjusted Langevin sampling) whose
denoiser can be made equivariant to a finite group of image transformations,
either exactly (group averaging) or stochastically (one random transform per
iteration).  An analysis toolkit measures the stability quantities that
explain why equivariance helps: Jacobian symmetry, local Lipschitz
constants, and the contraction factor of a full solver iteration.
"""

from . import analysis, config, denoisers, experiments, grid, groups, io, operators, solvers
from .rng import SeededRng

__all__ = [
    "analysis",
    "config",
    "denoisers",
    "experiments",
    "grid",
    "groups",
    "io",
    "operators",
    "solvers",
    "SeededRng",
]

__version__ = "0.1.0"
