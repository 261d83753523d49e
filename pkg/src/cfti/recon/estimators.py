"""scikit-learn style wrappers around the reconstruction and noise routines."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..noise import epsilon_empirical, epsilon_unweighted, estimate_sigma_rm
from ..sensing import MeasurementSet
from .core import minimal_energy, reconstruct_ci, reconstruct_dedup_ci, reconstruct_si
from .solver import ReconConfig

__all__ = ["auto_epsilon", "CSReconstructor", "MinimalEnergyReconstructor",
           "RobustNoiseEstimator"]


def auto_epsilon(meas, prior="1d", quantile=0.95, trials=100, seed=0):
    """Fidelity radius calibrated to the noise level stored in ``meas``.

    Weighted sets use the Monte-Carlo quantile over fresh plans from the same
    pmf; deduplicated sets use the exact chi-square quantile.
    """
    sigma = float(meas.sigma)
    if not np.isfinite(sigma):
        raise ValueError("measurement set has no noise level; pass epsilon explicitly")
    joint_ci = meas.scheme == "CI" and prior == "3d"
    blocks = meas.n_p if joint_ci else 1
    if meas.mode == "dedup":
        return epsilon_unweighted(sigma, meas.effective.m_eff, quantile, blocks)
    if sigma == 0:
        return 0.0
    return float(epsilon_empirical(meas.plan.pmf, [meas.plan.m], sigma, trials, quantile,
                                   seed, blocks)[0])


class CSReconstructor(TransformerMixin, BaseEstimator):
    """Sparse (l1) reconstruction of a :class:`MeasurementSet`.

    ``fit`` resolves the fidelity radius (``epsilon="auto"`` calibrates it
    from the stored noise level) and solves; ``transform`` returns the
    reconstructed :class:`HSVolume`.  SI data always use the joint prior.
    """

    def __init__(self, epsilon="auto", prior="1d", mode2d="isotropic", tol=1e-6,
                 max_iter=10_000, real=False, nonnegative=False, quantile=0.95,
                 epsilon_trials=100, random_state=0, raise_on_failure=True):
        self.epsilon = epsilon
        self.prior = prior
        self.mode2d = mode2d
        self.tol = tol
        self.max_iter = max_iter
        self.real = real
        self.nonnegative = nonnegative
        self.quantile = quantile
        self.epsilon_trials = epsilon_trials
        self.random_state = random_state
        self.raise_on_failure = raise_on_failure

    def _config(self, scheme):
        prior = "3d" if scheme == "SI" else self.prior
        return ReconConfig(prior=prior, mode2d=self.mode2d, tol=self.tol,
                           max_iter=self.max_iter, real=self.real,
                           nonnegative=self.nonnegative,
                           raise_on_failure=self.raise_on_failure)

    def fit(self, X, y=None):
        if not isinstance(X, MeasurementSet):
            raise TypeError("CSReconstructor.fit expects a MeasurementSet")
        config = self._config(X.scheme)
        if isinstance(self.epsilon, str):
            if self.epsilon != "auto":
                raise ValueError(f"epsilon must be 'auto' or a number, got {self.epsilon!r}")
            seed = 0 if self.random_state is None else int(self.random_state)
            self.epsilon_ = auto_epsilon(X, config.prior, self.quantile, self.epsilon_trials,
                                         seed)
        else:
            self.epsilon_ = float(self.epsilon)
        if X.mode == "dedup":
            solve = reconstruct_dedup_ci
        else:
            solve = reconstruct_ci if X.scheme == "CI" else reconstruct_si
        self.volume_, self.result_ = solve(X, self.epsilon_, config, return_result=True)
        self._fitted_on = id(X)
        return self

    def transform(self, X):
        if getattr(self, "_fitted_on", None) != id(X):
            self.fit(X)
        return self.volume_


class MinimalEnergyReconstructor(TransformerMixin, BaseEstimator):
    """Least-norm baseline: duplicate averaging and zero filling."""

    def fit(self, X, y=None):
        self.volume_ = minimal_energy(X)
        return self

    def transform(self, X):
        return minimal_energy(X)


class RobustNoiseEstimator(BaseEstimator):
    """Median-based noise std from the finest Haar details of interferograms.

    ``fit`` takes an ``(n_xi, n_p)`` array and stores ``sigma_``.
    """

    def fit(self, X, y=None):
        self.sigma_ = estimate_sigma_rm(X)
        return self

    def score(self, X, y=None):
        """Negative estimated noise std (larger means cleaner data)."""
        return -estimate_sigma_rm(X)
