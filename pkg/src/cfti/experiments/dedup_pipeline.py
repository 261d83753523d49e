"""Intensity-versus-subsampling trade-off on distinct OPD rows.

Raising the illumination from ``i_ref`` to ``I`` while keeping the total
exposure fixed allows ``round(n_xi * i_ref / I)`` frames.  Each arm simulates
Nyquist interferograms at intensity ``I``, keeps the distinct rows of a
random plan and reconstructs them with an unweighted fidelity term.
"""

import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..noise import epsilon_unweighted
from ..recon import ReconConfig, minimal_energy, reconstruct_dedup_ci, rsnr
from ..sampling import SamplingPlan, build_pmf_ci, derive_seed, draw_plan
from ..sensing import HSVolume, dedup_ci_forward, nyquist_forward
from .exposure import noise_sigma_for_snr
from .report import ExperimentReport, run_trials
from .volumes import SyntheticVolumeSpec, gen_synthetic_bio

__all__ = ["DedupPipelineSpec", "sigma_linear_model", "frames_for_intensity",
           "run_dedup_pipeline"]

#: Fitted slope and offset of the noise std against intensity (per 100 units).
SIGMA_SLOPE = 1.44e-2
SIGMA_OFFSET = 1.26e-1


def sigma_linear_model(intensity, a=SIGMA_SLOPE, b=SIGMA_OFFSET):
    """Noise std ``a * I / 100 + b`` of a camera frame at source intensity ``I``."""
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensity must be nonnegative")
    out = a * intensity / 100.0 + b
    return float(out) if out.ndim == 0 else out


def frames_for_intensity(intensity, i_ref, n_xi):
    """Number of frames ``round(n_xi * i_ref / I)`` at constant total exposure."""
    if not intensity >= i_ref > 0:
        raise ValueError(f"need intensity >= i_ref > 0, got {intensity} and {i_ref}")
    return max(1, int(round(n_xi * i_ref / intensity)))


@dataclass
class DedupPipelineSpec:
    """Protocol of the intensity sweep.

    When ``ref_snr_db`` is set the ground truth is rescaled so that full
    Nyquist data at ``i_ref`` have that input SNR; ``None`` keeps the scale of
    the supplied volume.  ``full_reference`` makes the ``I == i_ref`` arm use
    every OPD row instead of a random plan of ``n_xi`` draws.
    """

    volume: SyntheticVolumeSpec = field(default_factory=SyntheticVolumeSpec)
    i_ref: float = 100.0
    intensities: list = field(default_factory=lambda: [100, 200, 300, 400, 500, 600, 700])
    alpha: float = 1.0
    trials: int = 10
    seed: int = 0
    ref_snr_db: float = 20.0
    slope: float = SIGMA_SLOPE
    offset: float = SIGMA_OFFSET
    quantile: float = 0.95
    full_reference: bool = True
    config: ReconConfig = None
    threads: int = 1

    def __post_init__(self):
        if len(self.intensities) < 1:
            raise ValueError("the intensity grid is empty")
        if len(set(self.intensities)) != len(self.intensities):
            raise ValueError("the intensity grid has repeated values")
        for i in self.intensities:
            if not i >= self.i_ref > 0:
                raise ValueError(f"intensities must be >= i_ref = {self.i_ref}, got {i}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.config is None:
            self.config = ReconConfig(prior="1d", tol=1e-4, max_iter=3000, real=True,
                                      raise_on_failure=False)


def _ground_truth(spec, truth, trial):
    if truth is not None:
        vol = truth
    else:
        vol = gen_synthetic_bio(spec.volume, derive_seed(spec.seed, trial))
    if spec.ref_snr_db is None:
        return vol
    sigma_ref = sigma_linear_model(spec.i_ref, spec.slope, spec.offset)
    gain = sigma_ref / noise_sigma_for_snr(vol.data, spec.ref_snr_db)
    return HSVolume(vol.data * gain, vol.symmetric)


def _trial(spec, truth, task):
    i_idx, trial = task
    intensity = spec.intensities[i_idx]
    vol = _ground_truth(spec, truth, trial)
    n_xi = vol.n_xi
    sigma = sigma_linear_model(intensity, spec.slope, spec.offset)
    arm_seed = derive_seed(derive_seed(spec.seed, trial), i_idx + 1)
    scaled = HSVolume(vol.data * (intensity / spec.i_ref))
    y = nyquist_forward(scaled, sigma, derive_seed(arm_seed, 1))

    m = frames_for_intensity(intensity, spec.i_ref, n_xi)
    if spec.full_reference and m == n_xi:
        plan = SamplingPlan(build_pmf_ci(n_xi, 0.0), np.arange(n_xi), arm_seed)
    else:
        plan = draw_plan(build_pmf_ci(n_xi, spec.alpha), m, arm_seed)
    meas = dedup_ci_forward(y, plan, sigma)
    m_eff = meas.effective.m_eff
    blocks = vol.n_p if spec.config.prior == "3d" else 1
    eps = epsilon_unweighted(sigma, m_eff, spec.quantile, blocks)

    t0 = time.perf_counter()
    est, result = reconstruct_dedup_ci(meas, eps, spec.config, return_result=True)
    wall = 1e3 * (time.perf_counter() - t0)
    me = minimal_energy(meas)
    base = dict(scheme="CI", alpha=str(plan.pmf.alpha), ratio=m / n_xi, M=m, M_eff=m_eff,
                sigma=sigma, epsilon=eps, constrained=True, trial=trial, seed=arm_seed)
    return [dict(base, metric_name="rsnr_norm_cs", metric_value=rsnr(vol, est, True),
                 wall_ms=wall),
            dict(base, metric_name="rsnr_norm_me", metric_value=rsnr(vol, me, True),
                 wall_ms=None),
            dict(base, metric_name="m_eff_ratio", metric_value=m_eff / n_xi, wall_ms=None),
            dict(base, metric_name="intensity", metric_value=float(intensity), wall_ms=None),
            dict(base, metric_name="converged", metric_value=float(result.all_converged),
                 wall_ms=None)]


def run_dedup_pipeline(spec, truth=None):
    """Sweep the intensity grid; ``truth`` replaces the synthetic stand-in if given."""
    if truth is not None and not isinstance(truth, HSVolume):
        truth = HSVolume(truth)
    tasks = [(i, t) for i in range(len(spec.intensities)) for t in range(spec.trials)]
    results = run_trials(partial(_trial, spec, truth), tasks, spec.threads)
    meta = {k: v for k, v in vars(spec).items() if k not in ("volume", "config")}
    meta.update(experiment="dedup-pipeline", volume=vars(spec.volume).copy(),
                config=vars(spec.config).copy())
    report = ExperimentReport(meta=meta)
    for rows in results:
        for row in rows:
            report.add(**row)
    for i_idx, intensity in enumerate(spec.intensities):
        first = results[i_idx * spec.trials][0]
        for name in ("rsnr_norm_cs", "rsnr_norm_me", "m_eff_ratio"):
            vals = [r["metric_value"] for rows in results[i_idx * spec.trials:
                                                          (i_idx + 1) * spec.trials]
                    for r in rows if r["metric_name"] == name]
            report.add(scheme="CI", alpha=first["alpha"], ratio=first["ratio"], M=first["M"],
                       M_eff=None, sigma=first["sigma"], epsilon=None, constrained=True,
                       metric_name="mean_" + name, metric_value=float(np.mean(vals)),
                       trial=-1, seed=spec.seed, wall_ms=None)
    return report
