"""Compressive Fourier transform interferometry.

Variable-density OPD and spatio-spectral subsampling, weighted l1
reconstruction of hyperspectral volumes, noise-level calibration and
reproducible experiment drivers.  Submodules:

``transforms``  orthonormal DFT and Haar operators, Kronecker products
``coherence``   local coherence, analytic bounds and sample complexity
``sampling``    pmfs, plan drawing and deduplication
``noise``       fidelity radii and robust noise estimation
``sensing``     forward models and exposure scaling
``recon``       solvers, reconstructions and estimators
``experiments`` sweeps, synthetic volumes and reports
"""

from . import coherence, experiments, io, noise, recon, sampling, sensing, transforms
from .io import read_measurements, read_volume, write_measurements, write_volume
from .recon import (
    CSReconstructor,
    MinimalEnergyReconstructor,
    ReconConfig,
    RobustNoiseEstimator,
    minimal_energy,
    reconstruct_ci,
    reconstruct_dedup_ci,
    reconstruct_si,
    rsnr,
)
from .sampling import build_pmf_ci, build_pmf_optimal, build_pmf_si, dedup, draw_plan
from .sensing import HSVolume, MeasurementSet, ci_forward, nyquist_forward, si_forward

__version__ = "0.1.0"

__all__ = [
    "CSReconstructor",
    "HSVolume",
    "MeasurementSet",
    "MinimalEnergyReconstructor",
    "ReconConfig",
    "RobustNoiseEstimator",
    "build_pmf_ci",
    "build_pmf_optimal",
    "build_pmf_si",
    "ci_forward",
    "coherence",
    "dedup",
    "draw_plan",
    "experiments",
    "io",
    "minimal_energy",
    "noise",
    "nyquist_forward",
    "read_measurements",
    "read_volume",
    "recon",
    "reconstruct_ci",
    "reconstruct_dedup_ci",
    "reconstruct_si",
    "rsnr",
    "sampling",
    "sensing",
    "si_forward",
    "transforms",
    "write_measurements",
    "write_volume",
]
