"""Sampling distributions, iid index draws and deduplicated acquisition sets.

Indices are 0-based.  For CI plans they address OPD rows ``l`` of a single
interferogram; for SI plans they address entries of ``vec(X)`` through
``k = l + n_xi * j`` (pixel ``j``, OPD row ``l``).
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_power_of_two
from .coherence import CoherenceProfile
from .transforms import dc_index, frequencies

__all__ = [
    "Pmf",
    "SamplingPlan",
    "EffectiveSet",
    "build_pmf_ci",
    "build_pmf_si",
    "build_pmf_optimal",
    "draw_plan",
    "dedup",
    "expected_effective",
    "derive_seed",
    "si_index",
    "si_split",
    "power_masses",
]

_FAMILIES = ("uniform", "power", "optimal")
_SCHEMES = ("CI", "SI")


def power_masses(n_xi, alpha):
    """Unnormalised masses ``min(1, |k|^-alpha)`` over OPD rows (``k = 0`` gives 1)."""
    n_xi = check_power_of_two(n_xi, "n_xi", minimum=2)
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
    k = np.abs(frequencies(n_xi)).astype(float)
    masses = np.ones(n_xi)
    nz = k > 0
    masses[nz] = np.minimum(1.0, k[nz] ** (-alpha))
    return masses


@dataclass
class Pmf:
    """A probability mass function over sensing rows.

    ``norm_inverse`` is the sum of the unnormalised OPD masses (the inverse of
    the normalisation constant) for the power family, ``None`` otherwise.
    """

    probs: np.ndarray
    family: str
    scheme: str
    n_xi: int
    n_p: int = 1
    alpha: float = None
    norm_inverse: float = None
    cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite and nonnegative")
        total = probs.sum()
        if total <= 0:
            raise ValueError("probs must not be identically zero")
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1, got {total!r}")
        if self.family not in _FAMILIES:
            raise ValueError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        expected = self.n_xi * (self.n_p if self.scheme == "SI" else 1)
        if probs.size != expected:
            raise ValueError(f"expected {expected} probabilities, got {probs.size}")
        self.probs = probs
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        self.cdf = cdf

    @property
    def n(self):
        return self.probs.size

    @property
    def center(self):
        """Array index of the OPD origin."""
        return dc_index(self.n_xi)

    def opd_marginal(self):
        """Marginal pmf over OPD rows (identity for CI)."""
        if self.scheme == "CI":
            return self.probs
        return self.probs.reshape(self.n_p, self.n_xi).sum(axis=0)

    def pixel_marginal(self):
        if self.scheme == "CI":
            return np.ones(1)
        return self.probs.reshape(self.n_p, self.n_xi).sum(axis=1)


def build_pmf_ci(n_xi, alpha=1.0):
    """Power-law pmf ``p(l) ∝ min(1, |l - l0|^-alpha)`` over OPD rows."""
    masses = power_masses(n_xi, alpha)
    total = masses.sum()
    family = "uniform" if float(alpha) == 0 else "power"
    return Pmf(masses / total, family, "CI", int(n_xi), 1, float(alpha), float(total))


def build_pmf_si(n_xi, n_p, alpha=1.0):
    """Pixel-uniform extension of :func:`build_pmf_ci` to ``n_xi * n_p`` entries."""
    n_p = check_power_of_two(n_p, "n_p")
    ci = build_pmf_ci(n_xi, alpha)
    probs = np.tile(ci.probs / n_p, n_p)
    return Pmf(probs, ci.family, "SI", ci.n_xi, n_p, ci.alpha, ci.norm_inverse)


def build_pmf_optimal(profile, n_xi=None, n_p=1):
    """Pmf proportional to the squared coherence profile.

    ``profile`` is a :class:`CoherenceProfile` or a raw vector.  The scheme is
    SI when ``n_p > 1`` (the vector must then have ``n_xi * n_p`` entries).
    """
    mu = profile.kappa if isinstance(profile, CoherenceProfile) else np.asarray(profile, float)
    if mu.ndim != 1:
        raise ValueError("coherence profile must be a vector")
    weights = mu ** 2
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError("coherence profile must have positive energy")
    n_p = check_power_of_two(n_p, "n_p")
    if n_xi is None:
        if mu.size % n_p:
            raise ValueError("profile length is not a multiple of n_p")
        n_xi = mu.size // n_p
    scheme = "SI" if n_p > 1 else "CI"
    return Pmf(weights / total, "optimal", scheme, int(n_xi), n_p)


def derive_seed(base_seed, trial):
    """Deterministic 63-bit child seed for Monte-Carlo trial ``trial``."""
    state = np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


def si_index(pixel, row, n_xi):
    """Map (pixel ``j``, OPD row ``l``) to the entry of ``vec(X)``."""
    return np.asarray(row) + n_xi * np.asarray(pixel)


def si_split(index, n_xi):
    """Inverse of :func:`si_index`; returns ``(pixel, row)``."""
    pixel, row = np.divmod(np.asarray(index), n_xi)
    return pixel, row


@dataclass
class EffectiveSet:
    """Unique sorted indices of a plan with their multiplicities."""

    indices: np.ndarray
    multiplicities: np.ndarray

    @property
    def m_eff(self):
        return int(self.indices.size)


@dataclass
class SamplingPlan:
    """An ordered multiset of iid draws with their preconditioning weights."""

    pmf: Pmf
    draws: np.ndarray
    seed: int = None
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        if draws.ndim != 1 or draws.size == 0:
            raise ValueError("a plan needs at least one draw")
        if draws.min() < 0 or draws.max() >= self.pmf.n:
            raise ValueError(f"draw index out of range [0, {self.pmf.n})")
        p = self.pmf.probs[draws]
        if np.any(p <= 0):
            raise ValueError("plan contains indices with zero probability")
        self.draws = draws
        self.weights = p ** -0.5

    @property
    def scheme(self):
        return self.pmf.scheme

    @property
    def m(self):
        return int(self.draws.size)

    def expand_ci(self, n_p):
        """Full-volume indices ``l + n_xi * j`` of a CI plan, pixel-major."""
        if self.scheme != "CI":
            raise ValueError("only CI plans can be expanded over pixels")
        n_xi = self.pmf.n_xi
        return (self.draws[None, :] + n_xi * np.arange(n_p)[:, None]).ravel()

    def pixel_counts(self):
        """Number of draws landing in each pixel (SI plans)."""
        if self.scheme != "SI":
            raise ValueError("pixel counts are defined for SI plans")
        return np.bincount(self.draws // self.pmf.n_xi, minlength=self.pmf.n_p)


def draw_plan(pmf, m, seed=None):
    """Draw ``m`` iid indices from ``pmf`` by inverse-CDF search.

    ``seed=None`` draws a fresh seed from OS entropy; the seed used is always
    recorded on the returned plan.
    """
    if isinstance(m, (bool, np.bool_)) or int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random(int(m))
    draws = np.searchsorted(pmf.cdf, u, side="right")
    np.minimum(draws, pmf.n - 1, out=draws)
    return SamplingPlan(pmf, draws, int(seed))


def dedup(plan):
    """Unique indices of ``plan`` with multiplicities (sum equals ``plan.m``)."""
    draws = plan.draws if isinstance(plan, SamplingPlan) else np.asarray(plan, dtype=np.int64)
    indices, counts = np.unique(draws, return_counts=True)
    return EffectiveSet(indices, counts)


def expected_effective(pmf, m):
    """Closed-form ``E[M_eff] = sum_l 1 - (1 - p_l)^m``."""
    probs = pmf.probs if isinstance(pmf, Pmf) else np.asarray(pmf, dtype=float)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    with np.errstate(divide="ignore"):
        return float(np.sum(-np.expm1(m * np.log1p(-probs))))
