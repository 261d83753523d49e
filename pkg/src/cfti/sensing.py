"""Forward models for full (Nyquist), coded (CI) and structured (SI) acquisition.

A hyperspectral volume is an ``(n_xi, n_p)`` real matrix ``X``; column ``j``
is the spectrum of pixel ``j`` and ``vec(X)`` stacks columns.  Interferograms
are the centred unitary DFT ``F^* X`` of every column.  Noise is circular
complex Gaussian with variance ``sigma^2`` per complex sample.

In constrained-exposure mode the light budget of a full acquisition is spread
over fewer frames.  This is simulated by shrinking the noise level instead of
amplifying the data, which yields the same measurement-to-noise ratio.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_volume_array
from .noise import complex_noise
from .sampling import EffectiveSet, SamplingPlan, dedup
from .transforms import CenteredDFT

__all__ = [
    "HSVolume",
    "MeasurementSet",
    "symmetrize",
    "is_symmetric",
    "nyquist_forward",
    "ci_forward",
    "si_forward",
    "dedup_ci_forward",
    "constrained_ci_scale",
    "si_exposure_cap",
    "mnr_db",
]


def symmetrize(data):
    """Mirror rows so that ``X[i] == X[n_xi - 2 - i]`` around the OPD origin.

    Rows on the non-negative frequency side (array index ``>= n_xi/2 - 1``)
    are kept; the last row has no mirror partner and is kept as is.
    """
    data = np.array(data, dtype=float, copy=True)
    n_xi = data.shape[0]
    half = n_xi // 2 - 1
    for i in range(half):
        data[i] = data[n_xi - 2 - i]
    return data


def is_symmetric(data, atol=0.0):
    data = np.asarray(data)
    n_xi = data.shape[0]
    head = data[: n_xi - 1]
    return bool(np.allclose(head, head[::-1], rtol=0.0, atol=atol))


@dataclass
class HSVolume:
    """A real hyperspectral volume stored as an ``(n_xi, n_p)`` matrix."""

    data: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        data = np.asarray(self.data)
        if np.iscomplexobj(data):
            if np.any(data.imag != 0):
                raise ValueError("volume data must be real")
            data = data.real
        self.data = check_volume_array(data.astype(float, copy=False))
        if self.symmetric and not is_symmetric(self.data):
            raise ValueError("volume flagged symmetric but X[i] != X[n_xi-2-i]")

    @property
    def n_xi(self):
        return self.data.shape[0]

    @property
    def n_p(self):
        return self.data.shape[1]

    @property
    def side(self):
        return int(round(np.sqrt(self.n_p)))

    @property
    def n_hs(self):
        return self.data.size

    def vec(self):
        return self.data.ravel(order="F")

    @classmethod
    def from_vec(cls, x, n_xi, symmetric=False):
        x = np.asarray(x)
        return cls(x.reshape(n_xi, -1, order="F"), symmetric)


@dataclass
class MeasurementSet:
    """Acquired samples together with the plan that generated them.

    ``values`` has shape ``(rows, n_p)`` for CI (one row per draw, or per
    unique index in ``dedup`` mode) and ``(M,)`` for SI.  ``sigma`` is the
    noise std actually present in ``values``.
    """

    scheme: str
    values: np.ndarray
    plan: SamplingPlan
    sigma: float
    n_xi: int
    n_p: int
    amplification: float = 1.0
    constrained: bool = False
    effective: EffectiveSet = None
    mode: str = "weighted"
    seed: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in ("CI", "SI"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.mode not in ("weighted", "dedup"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.amplification > 0:
            raise ValueError("amplification must be positive")
        if not self.constrained and self.amplification != 1:
            raise ValueError("amplification must be 1 in unconstrained mode")
        values = np.asarray(self.values)
        if self.scheme == "CI":
            rows = self.effective.m_eff if self.mode == "dedup" else self.plan.m
            if values.shape != (rows, self.n_p):
                raise ValueError(f"CI values must have shape {(rows, self.n_p)}, got {values.shape}")
        elif values.shape != (self.plan.m,):
            raise ValueError(f"SI values must have shape {(self.plan.m,)}, got {values.shape}")
        self.values = values

    @property
    def rows(self):
        """Sensing-row index of each entry of ``values`` (first axis)."""
        if self.mode == "dedup":
            return self.effective.indices
        return self.plan.draws


def _interferograms(vol):
    data = vol.data if isinstance(vol, HSVolume) else check_volume_array(vol)
    return CenteredDFT(data.shape[0]).rmatvec(data, axis=0)


def _as_volume(vol):
    return vol if isinstance(vol, HSVolume) else HSVolume(vol)


def nyquist_forward(vol, sigma=0.0, seed=None):
    """Full interferogram matrix ``F^* X + N``."""
    sigma = check_positive(sigma, "sigma", strict=False)
    y = _interferograms(_as_volume(vol))
    if sigma > 0:
        y = y + complex_noise(np.random.default_rng(seed), y.shape, sigma)
    return y


def constrained_ci_scale(m_xi, n_xi):
    """Intensity amplification ``n_xi / m_xi`` of a constrained CI acquisition."""
    if m_xi < 1 or m_xi > n_xi:
        raise ValueError(f"need 1 <= m_xi <= n_xi, got m_xi={m_xi}, n_xi={n_xi}")
    return float(n_xi) / float(m_xi)


def si_exposure_cap(m, n_p, zeta=0.01):
    """High-probability bound on the largest per-pixel sample count of an SI plan.

    With probability at least ``1 - zeta`` no pixel receives more than the
    returned number of the ``m`` uniformly distributed draws.
    """
    if m < 1 or n_p < 1:
        raise ValueError("m and n_p must be >= 1")
    if not 0 < zeta < 1:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    t0 = (2.0 * n_p / (3.0 * m)) * np.log(n_p / zeta)
    return float((m / n_p) * (1.0 + (t0 + np.sqrt(t0 ** 2 + 12.0 * t0)) / 2.0))


def mnr_db(clean, noisy):
    """Measurement-to-noise ratio ``10 log10(||y||^2 / ||y - y_clean||^2)``."""
    clean = np.asarray(clean)
    err = np.linalg.norm(np.asarray(noisy) - clean)
    if err == 0:
        return np.inf
    return float(20 * np.log10(np.linalg.norm(clean) / err))


def _check_plan(plan, scheme, n):
    if not isinstance(plan, SamplingPlan):
        raise TypeError("plan must be a SamplingPlan")
    if plan.scheme != scheme:
        raise ValueError(f"expected a {scheme} plan, got {plan.scheme}")
    if plan.pmf.n != n:
        raise ValueError(f"plan addresses {plan.pmf.n} rows, volume has {n}")


def ci_forward(vol, plan, sigma=0.0, seed=None, constrained=False):
    """Coded-illumination samples: the OPD rows ``plan.draws`` of every pixel."""
    vol = _as_volume(vol)
    sigma = check_positive(sigma, "sigma", strict=False)
    _check_plan(plan, "CI", vol.n_xi)
    amp = constrained_ci_scale(plan.m, vol.n_xi) if constrained else 1.0
    sigma_eff = sigma / amp
    values = _interferograms(vol)[plan.draws]
    if sigma_eff > 0:
        values = values + complex_noise(np.random.default_rng(seed), values.shape, sigma_eff)
    return MeasurementSet("CI", values, plan, sigma_eff, vol.n_xi, vol.n_p, amp, constrained,
                          seed=seed)


def si_forward(vol, plan, sigma=0.0, seed=None, constrained=False, zeta=0.01):
    """Structured-illumination samples at entries ``plan.draws`` of ``vec(F^* X)``."""
    vol = _as_volume(vol)
    sigma = check_positive(sigma, "sigma", strict=False)
    _check_plan(plan, "SI", vol.n_hs)
    amp = vol.n_xi / si_exposure_cap(plan.m, vol.n_p, zeta) if constrained else 1.0
    sigma_eff = sigma / amp
    values = _interferograms(vol).ravel(order="F")[plan.draws]
    if sigma_eff > 0:
        values = values + complex_noise(np.random.default_rng(seed), values.shape, sigma_eff)
    meta = {"zeta": zeta} if constrained else {}
    return MeasurementSet("SI", values, plan, sigma_eff, vol.n_xi, vol.n_p, amp, constrained,
                          seed=seed, meta=meta)


def dedup_ci_forward(nyquist_y, plan, sigma=None):
    """Restrict full interferograms to the unique OPD rows of ``plan``."""
    nyquist_y = np.asarray(nyquist_y)
    if nyquist_y.ndim != 2:
        raise ValueError("nyquist data must be an (n_xi, n_p) array")
    n_xi, n_p = nyquist_y.shape
    _check_plan(plan, "CI", n_xi)
    eff = dedup(plan)
    sigma = float("nan") if sigma is None else float(sigma)
    return MeasurementSet("CI", nyquist_y[eff.indices], plan, sigma, n_xi, n_p,
                          effective=eff, mode="dedup")
