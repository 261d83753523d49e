"""RSNR sweeps over measurement ratios with and without an exposure budget."""

import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..noise import epsilon_empirical
from ..recon import ReconConfig, minimal_energy, reconstruct_ci, reconstruct_si, rsnr
from ..sampling import build_pmf_ci, build_pmf_si, dedup, derive_seed, draw_plan
from ..sensing import ci_forward, si_forward
from .report import ExperimentReport, run_trials
from .volumes import SyntheticVolumeSpec, gen_synthetic_bio

__all__ = ["ExposureSweepSpec", "noise_sigma_for_snr", "run_exposure_sweep"]


@dataclass
class ExposureSweepSpec:
    """Protocol of a CS-versus-ME sweep on synthetic volumes.

    ``constrained`` may be ``True``, ``False`` or ``"both"``.  The Nyquist
    noise level is fixed once per volume so that the full acquisition has an
    input SNR of ``snr_db``.
    """

    scheme: str = "CI"
    volume: SyntheticVolumeSpec = field(default_factory=SyntheticVolumeSpec)
    ratios: list = field(default_factory=lambda: [0.1, 0.2, 0.4, 0.6, 0.8, 1.0])
    constrained: object = "both"
    alpha: float = 1.0
    trials: int = 10
    seed: int = 0
    snr_db: float = 20.0
    epsilon_trials: int = 100
    zeta: float = 0.01
    config: ReconConfig = None
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in ("CI", "SI"):
            raise ValueError(f"scheme must be 'CI' or 'SI', got {self.scheme!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.constrained not in (True, False, "both"):
            raise ValueError("constrained must be True, False or 'both'")
        for r in self.ratios:
            if not 0 < r <= 1:
                raise ValueError(f"measurement ratios must lie in (0, 1], got {r}")
        if self.config is None:
            prior = "1d" if self.scheme == "CI" else "3d"
            self.config = ReconConfig(prior=prior, tol=1e-4, max_iter=3000, real=True,
                                      raise_on_failure=False)

    @property
    def arms(self):
        return [False, True] if self.constrained == "both" else [bool(self.constrained)]


def noise_sigma_for_snr(x, snr_db):
    """Per-sample complex noise std giving ``10 log10(||x||^2 / ||n||^2) = snr_db``.

    The noise has one sample per entry of ``x`` and the same total energy as
    the full Nyquist interferograms would carry.
    """
    x = np.asarray(x, dtype=float)
    energy = float(np.sum(x ** 2))
    if energy == 0:
        raise ValueError("cannot set an SNR for a zero volume")
    return float(np.sqrt(energy / (x.size * 10 ** (snr_db / 10.0))))


def _trial(spec, task):
    r_idx, constrained, trial = task
    ratio = spec.ratios[r_idx]
    vol_seed = derive_seed(spec.seed, trial)
    vol = gen_synthetic_bio(spec.volume, vol_seed)
    sigma = noise_sigma_for_snr(vol.data, spec.snr_db)
    plan_seed = derive_seed(vol_seed, r_idx + 1)
    noise_seed = derive_seed(plan_seed, 2 + int(constrained))

    n_xi, n_p = vol.n_xi, vol.n_p
    if spec.scheme == "CI":
        pmf = build_pmf_ci(n_xi, spec.alpha)
        m = max(1, int(round(ratio * n_xi)))
    else:
        pmf = build_pmf_si(n_xi, n_p, spec.alpha)
        m = max(1, int(round(ratio * n_xi * n_p)))
    plan = draw_plan(pmf, m, plan_seed)
    if spec.scheme == "CI":
        meas = ci_forward(vol, plan, sigma, noise_seed, constrained)
    else:
        meas = si_forward(vol, plan, sigma, noise_seed, constrained, spec.zeta)

    blocks = n_p if spec.scheme == "CI" and spec.config.prior == "3d" else 1
    eps = float(epsilon_empirical(pmf, [m], meas.sigma, spec.epsilon_trials,
                                  seed=derive_seed(plan_seed, 4), blocks=blocks)[0])
    t0 = time.perf_counter()
    if spec.scheme == "CI":
        est, result = reconstruct_ci(meas, eps, spec.config, return_result=True)
    else:
        est, result = reconstruct_si(meas, eps, spec.config, return_result=True)
    wall = 1e3 * (time.perf_counter() - t0)
    me = minimal_energy(meas)

    base = dict(scheme=spec.scheme, alpha=str(spec.alpha), ratio=float(ratio), M=m,
                M_eff=dedup(plan).m_eff, sigma=meas.sigma, epsilon=eps,
                constrained=constrained, trial=trial, seed=plan_seed)
    return [dict(base, metric_name="rsnr_cs", metric_value=rsnr(vol, est), wall_ms=wall),
            dict(base, metric_name="rsnr_me", metric_value=rsnr(vol, me), wall_ms=None),
            dict(base, metric_name="converged", metric_value=float(result.all_converged),
                 wall_ms=None),
            dict(base, metric_name="amplification", metric_value=meas.amplification,
                 wall_ms=None)]


def run_exposure_sweep(spec):
    """Per-trial RSNR of CS and ME reconstructions plus per-ratio means.

    Constrained arms rescale the noise by the exposure amplification of the
    acquisition scheme; unconstrained arms keep the Nyquist noise level.
    """
    tasks = [(r, c, t) for c in spec.arms for r in range(len(spec.ratios))
             for t in range(spec.trials)]
    results = run_trials(partial(_trial, spec), tasks, spec.threads)
    meta = {k: v for k, v in vars(spec).items() if k not in ("volume", "config")}
    meta.update(experiment="exposure-sweep", volume=vars(spec.volume).copy(),
                config=vars(spec.config).copy())
    report = ExperimentReport(meta=meta)
    for rows in results:
        for row in rows:
            report.add(**row)
    for constrained in spec.arms:
        for ratio in spec.ratios:
            for name in ("rsnr_cs", "rsnr_me"):
                vals = report.values(ratio=float(ratio), constrained=constrained,
                                     metric_name=name)
                report.add(scheme=spec.scheme, alpha=str(spec.alpha), ratio=float(ratio),
                           M=None, M_eff=None, sigma=None, epsilon=None,
                           constrained=constrained, metric_name="mean_" + name,
                           metric_value=float(vals.mean()), trial=-1, seed=spec.seed,
                           wall_ms=None)
    return report

