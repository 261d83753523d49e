"""Sparse reconstruction of hyperspectral volumes and baselines."""

from .core import (
    RSNR_CAP_DB,
    bpdn_weighted,
    group_duplicates,
    minimal_energy,
    reconstruct_ci,
    reconstruct_dedup_ci,
    reconstruct_si,
    rsnr,
    sparsity_basis,
)
from .estimators import (
    CSReconstructor,
    MinimalEnergyReconstructor,
    RobustNoiseEstimator,
    auto_epsilon,
)
from .solver import (
    ConvergenceError,
    ReconConfig,
    SolverResult,
    project_ellipsoid,
    soft_threshold,
    solve_l1_ellipsoid,
)

__all__ = [
    "RSNR_CAP_DB",
    "CSReconstructor",
    "MinimalEnergyReconstructor",
    "RobustNoiseEstimator",
    "auto_epsilon",
    "ConvergenceError",
    "ReconConfig",
    "SolverResult",
    "bpdn_weighted",
    "group_duplicates",
    "minimal_energy",
    "project_ellipsoid",
    "reconstruct_ci",
    "reconstruct_dedup_ci",
    "reconstruct_si",
    "rsnr",
    "soft_threshold",
    "solve_l1_ellipsoid",
    "sparsity_basis",
]
