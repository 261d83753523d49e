"""Noiseless phase-transition sweeps over sampling densities and measurement ratios."""

import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..coherence import local_coherence_exact, local_coherence_kron
from ..recon import ReconConfig, reconstruct_ci, reconstruct_si
from ..sampling import build_pmf_ci, build_pmf_optimal, build_pmf_si, dedup, draw_plan
from ..sensing import ci_forward, si_forward
from ..transforms import CenteredDFT, Haar1D
from .report import ExperimentReport, run_trials
from .volumes import gen_sparse_phantom

__all__ = ["PhaseTransitionSpec", "run_phase_transition", "optimal_pmf"]


@dataclass
class PhaseTransitionSpec:
    """Protocol of a phase-transition experiment.

    ``alphas`` entries are power-law exponents or the string ``"opt"`` for
    the coherence-optimal pmf.  A trial succeeds when the relative squared
    error is at most ``threshold``.
    """

    scheme: str = "SI"
    n_xi: int = 512
    n_p: int = 64
    k_xi: int = 4
    k_p: int = 4
    alphas: list = field(default_factory=lambda: [0, 1, 1.5, 2, 8, "opt"])
    ratios: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    trials: int = 50
    seed: int = 0
    threshold: float = 1e-10
    tol: float = 1e-8
    max_iter: int = 10_000
    certify: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in ("CI", "SI"):
            raise ValueError(f"scheme must be 'CI' or 'SI', got {self.scheme!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for r in self.ratios:
            if not 0 < r <= 1:
                raise ValueError(f"measurement ratios must lie in (0, 1], got {r}")
        for a in self.alphas:
            if a != "opt" and not float(a) >= 0:
                raise ValueError(f"invalid alpha {a!r}")


def optimal_pmf(scheme, n_xi, n_p):
    """Pmf proportional to the squared exact coherence of the scheme's basis pair."""
    mu = local_coherence_exact(CenteredDFT(n_xi), Haar1D(n_xi))
    if scheme == "CI":
        return build_pmf_optimal(mu, n_xi)
    side = int(round(np.sqrt(n_p)))
    # the 2D Haar basis has flat coherence 1/2 against the Dirac basis (1 if side == 1)
    mu_pix = np.full(n_p, 0.5 if side > 1 else 1.0)
    return build_pmf_optimal(local_coherence_kron(mu_pix, mu), n_xi, n_p)


def _pmf(spec, alpha):
    if alpha == "opt":
        return optimal_pmf(spec.scheme, spec.n_xi, spec.n_p)
    if spec.scheme == "CI":
        return build_pmf_ci(spec.n_xi, float(alpha))
    return build_pmf_si(spec.n_xi, spec.n_p, float(alpha))


def _certifier(coef_true, n_total, threshold):
    """Early-stop test proving that the truth cannot be the l1 minimiser.

    A feasible point whose l1 norm is below ``(1 - delta) ||s||_1`` shows the
    minimiser ``s*`` has ``||s* - s||_2^2 >= delta^2 ||s||_2^2 / n``; with
    ``delta`` chosen accordingly the trial is a certain failure.
    """
    l1_true = np.abs(coef_true).sum()
    delta = 2.0 * np.sqrt(threshold * n_total)
    bound = (1.0 - delta) * l1_true

    def stop(p):
        return np.abs(p).sum() < bound

    return stop


def _trial(spec, task):
    a_idx, r_idx, trial = task
    alpha, ratio = spec.alphas[a_idx], spec.ratios[r_idx]
    ss = np.random.SeedSequence([spec.seed, trial])
    vol_seed = int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
    plan_ss = np.random.SeedSequence([spec.seed, trial, a_idx + 1, r_idx + 1])
    plan_seed = int(plan_ss.generate_state(1, np.uint64)[0] >> np.uint64(1))

    prior = "1d" if spec.scheme == "CI" else "3d"
    vol, coef = gen_sparse_phantom(spec.n_xi, spec.n_p, spec.k_xi, spec.k_p, prior, vol_seed)
    pmf = _pmf(spec, alpha)
    n_dim = spec.n_xi if spec.scheme == "CI" else spec.n_xi * spec.n_p
    m = max(1, int(round(ratio * n_dim)))
    plan = draw_plan(pmf, m, plan_seed)
    config = ReconConfig(prior=prior, tol=spec.tol, feasibility_tol=1e-12,
                         max_iter=spec.max_iter, raise_on_failure=False)
    # the solver runs in the coefficient domain in the same layout as ``coef``
    coef_layout = coef if spec.scheme == "CI" else coef.ravel(order="F")
    stop_if = _certifier(coef_layout, coef.size, spec.threshold) if spec.certify else None

    t0 = time.perf_counter()
    certified = []

    def guard(p):
        if stop_if is not None and stop_if(p):
            certified.append(True)
            return True
        return False

    if spec.scheme == "CI":
        est, result = reconstruct_ci(ci_forward(vol, plan), 0.0, config, guard, True)
    else:
        est, result = reconstruct_si(si_forward(vol, plan), 0.0, config, guard, True)
    wall = 1e3 * (time.perf_counter() - t0)
    converged = result.all_converged
    certified = bool(certified)
    x = vol.data
    err = float(np.sum((est.data - x) ** 2) / np.sum(x ** 2))
    success = bool(converged and err <= spec.threshold)
    m_eff = dedup(plan).m_eff
    base = dict(scheme=spec.scheme, alpha=str(alpha), ratio=float(ratio), M=m, M_eff=m_eff,
                sigma=0.0, epsilon=0.0, constrained=False, trial=trial, seed=plan_seed,
                wall_ms=wall)
    return [dict(base, metric_name="success", metric_value=float(success)),
            dict(base, metric_name="rel_sq_error", metric_value=err),
            dict(base, metric_name="converged", metric_value=float(converged)),
            dict(base, metric_name="certified_failure", metric_value=float(certified))]


def run_phase_transition(spec):
    """Run all (alpha, ratio, trial) cells; returns an :class:`ExperimentReport`."""
    tasks = [(a, r, t) for a in range(len(spec.alphas)) for r in range(len(spec.ratios))
             for t in range(spec.trials)]
    results = run_trials(partial(_trial, spec), tasks, spec.threads)
    report = ExperimentReport(meta={"experiment": "phase-transition", "spec": vars(spec).copy()})
    for rows in results:
        for row in rows:
            report.add(**row)
    for a_idx, alpha in enumerate(spec.alphas):
        for ratio in spec.ratios:
            vals = report.values(alpha=str(alpha), ratio=float(ratio), metric_name="success")
            report.add(scheme=spec.scheme, alpha=str(alpha), ratio=float(ratio), M=None,
                       M_eff=None, sigma=0.0, epsilon=0.0, constrained=False,
                       metric_name="success_rate", metric_value=float(vals.mean()), trial=-1,
                       seed=spec.seed, wall_ms=None)
    return report
