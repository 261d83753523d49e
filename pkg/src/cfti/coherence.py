"""Local coherence between sensing and sparsity bases.

The exact profile is obtained by brute force on ``A = Phi^* Psi``; the
analytic profiles are the closed-form upper bounds used to build the
variable-density pmfs of the coded (CI) and structured (SI) illumination
schemes.  All logarithms are natural.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_power_of_two
from .transforms import frequencies

__all__ = [
    "CoherenceProfile",
    "local_coherence_exact",
    "local_coherence_kron",
    "kappa_ci",
    "kappa_si",
    "kappa_alpha",
    "kappa_optimal",
    "sample_complexity",
    "MAX_EXACT_DIM",
]

#: Largest dimension for which the brute-force profile is materialised.
MAX_EXACT_DIM = 2 ** 12


@dataclass
class CoherenceProfile:
    """Per-row coherence bound ``kappa`` and its squared norm."""

    kappa: np.ndarray
    kind: str
    kappa_sq_norm: float = field(init=False)

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        if np.any(self.kappa < 0) or not np.all(np.isfinite(self.kappa)):
            raise ValueError("kappa must be finite and nonnegative")
        self.kappa_sq_norm = float(np.sum(self.kappa ** 2))

    def __len__(self):
        return self.kappa.size


def local_coherence_exact(sensing, sparsity, block=256):
    """Brute-force ``mu_l = max_j |(Phi^* Psi)_{l,j}|`` for every row ``l``.

    ``sensing`` and ``sparsity`` are basis objects from
    :mod:`cfti.transforms` (anything with ``n``, ``matvec`` and ``rmatvec``)
    or dense square matrices.
    """
    sensing = _as_basis(sensing)
    sparsity = _as_basis(sparsity)
    n = sensing.n
    if sparsity.n != n:
        raise ValueError(f"dimension mismatch: sensing {n} vs sparsity {sparsity.n}")
    if n > MAX_EXACT_DIM:
        raise ValueError(f"exact coherence limited to n <= {MAX_EXACT_DIM}, got {n}")
    mu = np.zeros(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        cols = np.zeros((n, stop - start))
        cols[np.arange(start, stop), np.arange(stop - start)] = 1.0
        a = sensing.rmatvec(sparsity.matvec(cols, axis=0), axis=0)
        mu = np.maximum(mu, np.abs(a).max(axis=1))
    return mu


def local_coherence_kron(mu_left, mu_right):
    """Coherence of a Kronecker pair from the coherences of its factors.

    For ``Phi = Phi_L (x) Phi_R`` and ``Psi = Psi_L (x) Psi_R`` every entry of
    ``Phi^* Psi`` is a product of factor entries, so the row maxima multiply.
    This reaches sizes where the brute-force profile is unaffordable.
    """
    return np.kron(np.asarray(mu_left, dtype=float), np.asarray(mu_right, dtype=float))


class _DenseBasis:
    def __init__(self, mat):
        mat = np.asarray(mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("dense basis must be a square matrix")
        self.mat = mat
        self.n = mat.shape[0]

    def matvec(self, x, axis=0):
        return np.moveaxis(np.tensordot(self.mat, x, axes=(1, axis)), 0, axis)

    def rmatvec(self, x, axis=0):
        return np.moveaxis(np.tensordot(self.mat.conj().T, x, axes=(1, axis)), 0, axis)

    def dense(self):
        return self.mat


def _as_basis(obj):
    if hasattr(obj, "rmatvec") and hasattr(obj, "n"):
        return obj
    return _DenseBasis(obj)


def _decay(n_xi, power):
    k = np.abs(frequencies(n_xi)).astype(float)
    out = np.ones(n_xi)
    nz = k > 0
    out[nz] = np.minimum(1.0, k[nz] ** (-power))
    return out


def kappa_ci(n_xi):
    """Fourier/1D-Haar bound ``sqrt(2) * min(1, |l - n_xi/2|^(-1/2))``."""
    n_xi = check_power_of_two(n_xi, "n_xi", minimum=2)
    return CoherenceProfile(np.sqrt(2.0) * _decay(n_xi, 0.5), kind="analytic-CI")


def kappa_si(n_xi, n_p):
    """Bound for ``(I (x) F)`` against ``(Psi_2D (x) Psi_1D)``; pixel-invariant."""
    n_xi = check_power_of_two(n_xi, "n_xi", minimum=2)
    n_p = check_power_of_two(n_p, "n_p")
    side = int(round(np.sqrt(n_p)))
    if side * side != n_p:
        raise ValueError(f"n_p must be a square number, got {n_p}")
    per_pixel = (np.sqrt(2.0) / 2.0) * _decay(n_xi, 0.5)
    return CoherenceProfile(np.tile(per_pixel, n_p), kind="analytic-SI")


def kappa_alpha(n_xi, alpha, mu=None):
    """Smallest bound vector proportional to the power-law pmf of exponent ``alpha``.

    With ``mu`` (an exact coherence profile) the scale is the least ``t`` with
    ``t * p(l) >= mu_l**2`` for every row.  Without it only the row
    ``l = n_xi/2`` (where the coherence equals one) is enforced, which gives
    the lower bound ``||kappa||^2 >= 1 / C``.
    """
    n_xi = check_power_of_two(n_xi, "n_xi", minimum=2)
    masses = _decay(n_xi, float(alpha))
    probs = masses / masses.sum()
    if mu is None:
        scale = 1.0 / probs.max()
    else:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != probs.shape:
            raise ValueError("mu must have one entry per OPD row")
        scale = float(np.max(mu ** 2 / probs))
    return CoherenceProfile(np.sqrt(scale * probs), kind="alpha-family")


def kappa_optimal(mu):
    """Profile equal to the exact coherence itself."""
    return CoherenceProfile(np.asarray(mu, dtype=float), kind="exact")


def sample_complexity(K, N, kappa_sq_norm, delta):
    """Uncalibrated index ``delta^-2 ||kappa||^2 K log^3(K) log(N)``.

    The hidden absolute constant is unknown, so only ratios and trends of this
    number are meaningful.
    """
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if kappa_sq_norm <= 0:
        raise ValueError("kappa_sq_norm must be positive")
    return float(kappa_sq_norm * K * np.log(K) ** 3 * np.log(N) / delta ** 2)
