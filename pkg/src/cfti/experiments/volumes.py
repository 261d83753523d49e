"""Ground-truth volumes: sparse phantoms and synthetic fluorescence-like scenes."""

from dataclasses import dataclass

import numpy as np

from .._validation import check_power_of_two
from ..recon import sparsity_basis
from ..sensing import HSVolume, symmetrize
from ..transforms import dc_index

__all__ = [
    "gen_sparse_phantom",
    "SyntheticVolumeSpec",
    "gen_synthetic_bio",
    "blob_abundances",
    "bump_spectrum",
]


def gen_sparse_phantom(n_xi, n_p, k_xi=4, k_p=4, prior="1d", seed=None, mode2d="isotropic"):
    """Volume ``X = Psi S`` with ``S`` supported on ``k_xi`` rows by ``k_p`` columns.

    ``prior="1d"`` uses the spectral Haar basis on every pixel (the CI
    setting), ``prior="3d"`` the spatial-times-spectral Haar basis (SI).
    Returns the volume and the coefficient matrix ``S``.
    """
    n_xi = check_power_of_two(n_xi, "n_xi", minimum=2)
    n_p = check_power_of_two(n_p, "n_p")
    if not 1 <= k_xi <= n_xi or not 1 <= k_p <= n_p:
        raise ValueError(f"sparsity ({k_xi}, {k_p}) must fit in ({n_xi}, {n_p})")
    rng = np.random.default_rng(seed)
    rows = rng.choice(n_xi, k_xi, replace=False)
    cols = rng.choice(n_p, k_p, replace=False)
    coef = np.zeros((n_xi, n_p))
    coef[np.ix_(rows, cols)] = rng.standard_normal((k_xi, k_p))
    basis = sparsity_basis(n_xi, n_p, prior, mode2d)
    if prior == "1d":
        data = basis.matvec(coef, axis=0)
    else:
        data = basis.matvec(coef.ravel(order="F")).reshape(n_xi, n_p, order="F")
    return HSVolume(data), coef


def bump_spectrum(n_xi, center, width, amplitude=1.0, flat=0.0):
    """Smooth unimodal bump on the one-sided wavenumber axis.

    ``center`` and ``width`` are in samples counted from the OPD origin.  A
    ``flat`` top of the given half-length is inserted between two Gaussian
    flanks, which mimics the broad plateau of dye emission curves.
    """
    if width <= 0 or amplitude < 0:
        raise ValueError("width must be positive and amplitude nonnegative")
    if not 0 <= center <= n_xi // 2:
        raise ValueError(f"peak center must lie in [0, {n_xi // 2}], got {center}")
    pos = np.arange(n_xi) - dc_index(n_xi)
    dist = np.maximum(np.abs(pos - center) - flat, 0.0)
    return amplitude * np.exp(-0.5 * (dist / width) ** 2)


def blob_abundances(side, count, rng, radius_range=(0.08, 0.25), edge=0.15):
    """Nonnegative map made of soft-edged discs (cell-like blobs) in ``[0, 1]``."""
    t = (np.arange(side) + 0.5) / side
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    out = np.zeros((side, side))
    for _ in range(count):
        c1, c2 = rng.random(2)
        r = rng.uniform(*radius_range)
        d = np.sqrt((t1 - c1) ** 2 + (t2 - c2) ** 2)
        level = rng.uniform(0.5, 1.0)
        out = np.maximum(out, level * np.clip((r - d) / (edge * r) + 1.0, 0.0, 1.0)
                         * (d <= r * (1 + edge)))
    return out


@dataclass
class SyntheticVolumeSpec:
    """Parameters of a synthetic fluorescence-like volume.

    Each endmember is a ``(center, width, amplitude)`` triple in samples from
    the OPD origin.  Left as ``None``, the peaks and the plateau half-length
    ``flat`` default to three narrow-edged bands whose positions scale with
    ``n_xi``.  ``abundances`` may hold user images of shape
    ``(n_end, side, side)``; otherwise procedural blobs are generated.
    """

    n_xi: int = 512
    side: int = 16
    peaks: list = None
    flat: float = None
    blobs_per_map: int = 4
    abundances: np.ndarray = None
    symmetric: bool = True

    def __post_init__(self):
        check_power_of_two(self.n_xi, "n_xi", minimum=4)
        check_power_of_two(self.side, "side")
        scale = self.n_xi / 512.0
        if self.peaks is None:
            width = max(1.0, scale)
            self.peaks = [(80.0 * scale, width, 1.0), (128.0 * scale, width, 0.8),
                          (176.0 * scale, width, 0.9)]
        if self.flat is None:
            self.flat = 10.0 * scale
        if len(self.peaks) < 1:
            raise ValueError("at least one endmember is required")
        if self.flat < 0:
            raise ValueError("flat must be nonnegative")
        for center, width, amp in self.peaks:
            if not 0 <= center <= self.n_xi // 2 or width <= 0 or amp < 0:
                raise ValueError(f"invalid peak parameters {(center, width, amp)}")
        if self.abundances is not None:
            ab = np.asarray(self.abundances, dtype=float)
            if ab.shape != (len(self.peaks), self.side, self.side) or np.any(ab < 0):
                raise ValueError("abundances must be nonnegative with shape (n_end, side, side)")

    @property
    def n_end(self):
        return len(self.peaks)


def gen_synthetic_bio(spec=None, seed=None):
    """Linear mixture ``X = sum_e s_e a_e^T`` of bump spectra and abundance maps."""
    spec = spec or SyntheticVolumeSpec()
    rng = np.random.default_rng(seed)
    spectra = np.stack([bump_spectrum(spec.n_xi, c, w, a, spec.flat) for c, w, a in spec.peaks],
                       axis=1)
    if spec.abundances is not None:
        maps = np.asarray(spec.abundances, dtype=float)
    else:
        maps = np.stack([blob_abundances(spec.side, spec.blobs_per_map, rng)
                         for _ in range(spec.n_end)])
    # image (t1, t2) -> pixel index t1 + side * t2
    ab = maps.reshape(spec.n_end, -1, order="F")
    data = spectra @ ab
    if spec.symmetric:
        data = symmetrize(data)
    return HSVolume(data, symmetric=spec.symmetric)
