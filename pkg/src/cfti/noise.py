"""Noise-level bounds for weighted fidelity constraints and noise estimation.

Radii are expressed for the normalised residual ``||D n|| / sqrt(M)``, where
``D`` holds the per-draw weights ``p(index)^(-1/2)`` of a sampling plan.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from ._validation import check_positive, check_power_of_two
from .sampling import Pmf, draw_plan, derive_seed
from .transforms import haar1d_analysis

__all__ = [
    "NoiseBound",
    "rho_for_pmf",
    "epsilon_uds",
    "epsilon_vds",
    "epsilon_empirical",
    "epsilon_unweighted",
    "estimate_sigma_rm",
    "complex_noise",
    "MAD_CONSTANT",
]

#: Median absolute deviation of a standard normal variable.
MAD_CONSTANT = 0.6745

_METHODS = ("analytic-uds", "analytic-vds", "empirical-percentile", "chi-square")


@dataclass
class NoiseBound:
    sigma: float
    epsilon: float
    method: str
    s: float = None
    rho: float = 1.0
    n: int = None
    m: int = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.epsilon < 0 or self.sigma < 0:
            raise ValueError("sigma and epsilon must be nonnegative")
        if self.rho < 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")


def complex_noise(rng, shape, sigma):
    """Circular complex Gaussian noise with ``E|n|^2 = sigma^2`` per sample."""
    scale = sigma / np.sqrt(2.0)
    return scale * rng.standard_normal(shape) + 1j * scale * rng.standard_normal(shape)


def rho_for_pmf(pmf, closed_form=True):
    """Sub-exponential moment bound of ``1 / p`` for a power-family pmf.

    Uses ``C^-1 * (n_xi/2)^alpha / n_xi`` on the OPD marginal.  For
    ``alpha == 1`` and ``closed_form=True`` the explicit bound
    ``2 + log(n_xi / 2)`` is returned instead.
    """
    if not isinstance(pmf, Pmf):
        raise TypeError("rho_for_pmf expects a Pmf")
    if pmf.family == "optimal" or pmf.norm_inverse is None:
        raise ValueError("rho is only available for power-family pmfs; use epsilon_empirical")
    n_xi, alpha = pmf.n_xi, pmf.alpha
    if alpha == 0:
        return 1.0
    if alpha == 1 and closed_form:
        return 2.0 + np.log(n_xi / 2)
    return max(1.0, pmf.norm_inverse * (n_xi / 2) ** alpha / n_xi)


def _check_common(sigma, n, m, s):
    sigma = check_positive(sigma, "sigma", strict=False)
    n = check_positive(n, "N")
    m = check_positive(m, "M")
    s = check_positive(s, "s", strict=False)
    return sigma, n, m, s


def _uds_bracket(m, s):
    return 1.0 + np.sqrt(s / m) / np.sqrt(2.0) + s / m


def epsilon_uds(sigma, n, m, s=6.0):
    """Fidelity radius under uniform sampling."""
    sigma, n, m, s = _check_common(sigma, n, m, s)
    return float(sigma * np.sqrt(n) * np.sqrt(_uds_bracket(m, s)))


def epsilon_vds(sigma, n, m, s=8.2, rho=1.0):
    """Fidelity radius under variable-density sampling with moment bound ``rho``."""
    sigma, n, m, s = _check_common(sigma, n, m, s)
    rho = float(rho)
    if not rho >= 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    extra = 4 * np.e * (2 * np.log(m) + s) * max(s / m, np.sqrt(s / m)) * rho
    return float(sigma * np.sqrt(n) * np.sqrt(_uds_bracket(m, s) + extra))


def epsilon_empirical(pmf, m_grid, sigma=1.0, trials=100, quantile=0.95, seed=0, blocks=1):
    """Monte-Carlo quantile of ``||D n|| / sqrt(M)`` for each ``M`` in ``m_grid``.

    Each trial draws a fresh plan and fresh complex Gaussian noise.  The
    result is exactly linear in ``sigma``.  With ``blocks > 1`` the noise is
    an ``(M, blocks)`` matrix sharing the plan (CI with a joint prior) and the
    statistic becomes ``||D N||_F / sqrt(M * blocks)``.
    """
    sigma = check_positive(sigma, "sigma", strict=False)
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    if not 0 < quantile < 1:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    if int(blocks) != blocks or blocks < 1:
        raise ValueError(f"blocks must be a positive integer, got {blocks}")
    blocks = int(blocks)
    if np.count_nonzero(pmf.probs) < 1:
        raise ValueError("degenerate pmf")
    m_grid = np.atleast_1d(np.asarray(m_grid, dtype=int))
    out = np.empty(m_grid.size)
    for g, m in enumerate(m_grid):
        stats = np.empty(trials)
        for t in range(trials):
            child = derive_seed(seed, g * trials + t)
            plan = draw_plan(pmf, int(m), child)
            rng = np.random.default_rng(derive_seed(child, 1))
            noise = complex_noise(rng, (plan.m, blocks), 1.0)
            stats[t] = np.linalg.norm(plan.weights[:, None] * noise) / np.sqrt(plan.m * blocks)
        out[g] = sigma * np.quantile(stats, quantile)
    return out


def epsilon_unweighted(sigma, m, quantile=0.95, blocks=1):
    """Exact quantile of ``||n|| / sqrt(m * blocks)`` for unweighted complex noise.

    ``2 ||n||^2 / sigma^2`` is chi-square with ``2 m blocks`` degrees of
    freedom, which gives the radius of a fidelity term on distinct rows.
    """
    sigma = check_positive(sigma, "sigma", strict=False)
    m = int(check_positive(m, "m"))
    if not 0 < quantile < 1:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    dof = 2 * m * int(blocks)
    return float(sigma * np.sqrt(chi2.ppf(quantile, dof) / dof))


def estimate_sigma_rm(interferograms):
    """Robust median estimate of the noise std from ``(n_xi, n_p)`` data.

    Uses the finest-scale 1D Haar detail coefficients of every column.  For
    complex data the real and imaginary details are pooled and the result is
    rescaled so that it estimates the per-complex-sample std.
    """
    data = np.asarray(interferograms)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ValueError("expected an (n_xi, n_p) array")
    n_xi = check_power_of_two(data.shape[0], "n_xi", minimum=2)
    scale = 1.0
    if np.iscomplexobj(data):
        data = np.concatenate([data.real, data.imag], axis=1)
        scale = np.sqrt(2.0)
    finest = haar1d_analysis(data.astype(float))[n_xi // 2:]
    return scale * float(np.median(np.abs(finest))) / MAD_CONSTANT
