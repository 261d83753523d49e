"""Reproducible experiment drivers and report serialisation."""

from ..io import read_volume, write_volume
from .dedup_pipeline import (
    DedupPipelineSpec,
    frames_for_intensity,
    run_dedup_pipeline,
    sigma_linear_model,
)
from .exposure import ExposureSweepSpec, noise_sigma_for_snr, run_exposure_sweep
from .phase_transition import PhaseTransitionSpec, optimal_pmf, run_phase_transition
from .report import ExperimentReport, run_trials, write_report
from .volumes import (
    SyntheticVolumeSpec,
    blob_abundances,
    bump_spectrum,
    gen_sparse_phantom,
    gen_synthetic_bio,
)

__all__ = [
    "DedupPipelineSpec",
    "ExposureSweepSpec",
    "frames_for_intensity",
    "noise_sigma_for_snr",
    "run_dedup_pipeline",
    "run_exposure_sweep",
    "sigma_linear_model",
    "ExperimentReport",
    "PhaseTransitionSpec",
    "SyntheticVolumeSpec",
    "blob_abundances",
    "bump_spectrum",
    "gen_sparse_phantom",
    "gen_synthetic_bio",
    "optimal_pmf",
    "read_volume",
    "run_phase_transition",
    "run_trials",
    "write_report",
    "write_volume",
]
