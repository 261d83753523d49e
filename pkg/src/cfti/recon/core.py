"""Reconstruction routines built on the generic ellipsoid-constrained l1 solver.

Fidelity radii follow one convention throughout: ``epsilon`` bounds the
normalised weighted residual, ``||D (y - A u)|| <= epsilon * sqrt(M)``.
Duplicated sensing rows are merged exactly: the weighted residual over all
draws equals the weighted residual of the duplicate means plus a constant
scatter term, which is moved to the right-hand side.
"""

import numpy as np

from ..sensing import HSVolume, MeasurementSet
from ..transforms import CenteredDFT, Haar1D, Haar2D, Identity, KronOperator
from .solver import ConvergenceError, ReconConfig, solve_l1_ellipsoid

__all__ = [
    "group_duplicates",
    "bpdn_weighted",
    "reconstruct_ci",
    "reconstruct_si",
    "reconstruct_dedup_ci",
    "minimal_energy",
    "rsnr",
    "sparsity_basis",
    "RSNR_CAP_DB",
]

#: Value reported by :func:`rsnr` for an exact reconstruction.
RSNR_CAP_DB = 300.0


def group_duplicates(values, rows, sq_weights):
    """Merge repeated rows of a weighted least-squares residual.

    Returns ``(unique_rows, means, group_weights, scatter)`` such that for any
    ``v``: ``sum_r d_r^2 |y_r - v_{row(r)}|^2 = sum_l w_l |mean_l - v_l|^2 + scatter``.
    """
    values = np.asarray(values)
    rows = np.asarray(rows)
    sq_weights = np.asarray(sq_weights, dtype=float)
    uniq, inverse = np.unique(rows, return_inverse=True)
    inverse = inverse.ravel()
    extra = values.shape[1:]
    w = np.bincount(inverse, weights=sq_weights, minlength=uniq.size)
    dw = sq_weights.reshape((-1,) + (1,) * len(extra))
    sums = np.zeros((uniq.size,) + extra, dtype=complex)
    np.add.at(sums, inverse, dw * values)
    means = sums / w.reshape((-1,) + (1,) * len(extra))
    scatter = np.sum(dw * np.abs(values - means[inverse]) ** 2, axis=0)
    return uniq, means, w, scatter


def _mirror_rows(rows, n_xi):
    """Index of the conjugate-frequency sample (row ``i`` pairs with ``n_xi - 2 - i``)."""
    pixel, row = np.divmod(np.asarray(rows), n_xi)
    return pixel * n_xi + (n_xi - 2 - row) % n_xi


def sparsity_basis(n_xi, n_p, prior="1d", mode2d="isotropic"):
    """Basis object for the spectral (per pixel) or spatio-spectral prior."""
    if prior == "1d":
        return Haar1D(n_xi)
    side = int(round(np.sqrt(n_p)))
    return KronOperator(Haar2D(side, mode2d), Haar1D(n_xi))


class _RowSampler:
    """``G s = (sensing^* sparsity s)[rows]`` and its adjoint (zero filling)."""

    def __init__(self, sensing, sparsity, rows):
        if sensing.n != sparsity.n:
            raise ValueError(f"dimension mismatch: sensing {sensing.n} vs sparsity {sparsity.n}")
        self.sensing = sensing
        self.sparsity = sparsity
        self.rows = np.asarray(rows)
        if self.rows.min() < 0 or self.rows.max() >= sensing.n:
            raise ValueError("row index out of range")

    def forward(self, s):
        return self.sensing.rmatvec(self.sparsity.matvec(s, axis=0), axis=0)[self.rows]

    def adjoint(self, z):
        full = np.zeros((self.sensing.n,) + z.shape[1:], dtype=complex)
        full[self.rows] = z
        return self.sparsity.rmatvec(self.sensing.matvec(full, axis=0), axis=0)

    def nonneg_projection(self, s):
        u = self.sparsity.matvec(s, axis=0)
        return self.sparsity.rmatvec(np.maximum(u.real, 0.0), axis=0).astype(complex)


def _fidelity_radius(epsilon, m, scatter, energy, tol):
    budget = float(epsilon) ** 2 * m
    r2 = budget - scatter
    # rounding in the duplicate means leaves a tiny scatter even for exact data
    slack = tol * np.maximum(budget, energy)
    if np.any(r2 < -slack):
        raise ValueError(
            "fidelity radius too small: duplicate samples alone exceed the budget "
            f"(epsilon={epsilon})")
    return np.sqrt(np.maximum(r2, 0.0))


def _solve(sampler, y, rows, sq_weights, epsilon, m, config, stop_if, shape):
    uniq, means, w, scatter = group_duplicates(y, rows, sq_weights)
    if not np.array_equal(uniq, sampler.rows):
        raise ValueError("sampler rows do not match the grouped measurement rows")
    dw = sq_weights.reshape((-1,) + (1,) * (np.ndim(y) - 1))
    energy = np.sum(dw * np.abs(y) ** 2, axis=0)
    radius = _fidelity_radius(epsilon, m, scatter, energy, config.feasibility_tol)
    result = solve_l1_ellipsoid(sampler.forward, sampler.adjoint, means, w, radius, shape,
                                config, stop_if, sampler.nonneg_projection)
    if config.real and not config.nonnegative and result.status != "zero-feasible":
        result.coef = _polish_real(sampler, result.coef, means, w, radius)
    return result


def _real_least_squares(sampler, b, w):
    """Real coefficients minimising the weighted residual.

    A real signal ties each sample to the conjugate of its mirror-frequency
    partner, so paired rows are replaced by their weighted average.
    """
    sensing = sampler.sensing
    n_xi = sensing.right.n if isinstance(sensing, KronOperator) else sensing.n
    rows = sampler.rows
    mirror = _mirror_rows(rows, n_xi)
    pos = np.searchsorted(rows, mirror)
    pos = np.minimum(pos, rows.size - 1)
    paired = rows[pos] == mirror
    wb = w.reshape((-1,) + (1,) * (b.ndim - 1))
    v = b.astype(complex)
    mate = pos[paired]
    v[paired] = (wb[paired] * b[paired] + wb[mate] * np.conj(b[mate])) / (wb[paired] + wb[mate])
    full = np.zeros((sensing.n,) + b.shape[1:], dtype=complex)
    full[mirror] = np.conj(v)
    full[rows] = v
    return sampler.sparsity.rmatvec(sensing.matvec(full, axis=0), axis=0).real


def _polish_real(sampler, coef, b, w, radius):
    """Move a nearly feasible real estimate just inside the fidelity ellipsoid.

    The step goes toward the real least-squares point along a straight line,
    by the smallest amount that restores feasibility.  Columns that are
    already feasible, or whose least-squares point is not, are left alone.
    """
    wb = w.reshape((-1,) + (1,) * (b.ndim - 1))
    e0 = b - sampler.forward(coef)
    c = np.sum(wb * np.abs(e0) ** 2, axis=0)
    r2 = np.asarray(radius, dtype=float) ** 2
    if np.all(c <= r2):
        return coef
    direction = _real_least_squares(sampler, b, w) - coef
    g = sampler.forward(direction)
    a = np.sum(wb * np.abs(g) ** 2, axis=0)
    beta = np.sum(wb * np.real(np.conj(g) * e0), axis=0)
    end = c - 2 * beta + a
    disc = np.maximum(beta ** 2 - a * (c - r2), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (beta - np.sqrt(disc)) / a
    # tiny overshoot keeps the result inside despite rounding
    t = np.clip(t * (1 + 1e-9) + 1e-15, 0.0, 1.0)
    move = (c > r2) & (end <= r2) & (a > 0)
    t = np.where(move, t, 0.0)
    return coef + t * direction


def bpdn_weighted(y, rows, weights, sensing, sparsity, epsilon, config=None, stop_if=None):
    """Solve ``min ||Psi^T u||_1 s.t. ||D (y - (A^* u)_rows)|| <= epsilon sqrt(M)``.

    ``y`` holds one sample per entry of ``rows`` (extra trailing axes are
    independent problems sharing the rows and weights); ``weights`` are the
    diagonal entries of ``D``.  Returns ``(u, result)`` with ``u`` the signal
    estimate and ``result`` the :class:`SolverResult` in the coefficient domain.
    """
    config = config or ReconConfig()
    y = np.asarray(y)
    rows = np.asarray(rows)
    weights = np.asarray(weights, dtype=float)
    if y.shape[0] != rows.size or weights.shape != rows.shape:
        raise ValueError("y, rows and weights must have matching first dimensions")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    sampler = _RowSampler(sensing, sparsity, np.unique(rows))
    shape = (sparsity.n,) + y.shape[1:]
    result = _solve(sampler, y, rows, weights ** 2, epsilon, rows.size, config, stop_if, shape)
    u = sparsity.matvec(result.coef, axis=0)
    return u, result


def _finish(u, result, config, n_xi, what, return_result=False):
    if config.raise_on_failure and not result.all_converged:
        bad = np.flatnonzero(~np.atleast_1d(result.converged))
        raise ConvergenceError(
            f"{what}: solver stopped ({result.status}) after {result.iterations} iterations "
            f"without meeting tol={config.tol}; unconverged columns {bad.tolist()}",
            columns=bad, result=result)
    vol = HSVolume(np.real(u).reshape(n_xi, -1, order="F"))
    return (vol, result) if return_result else vol


def _joint_ci(values, rows, weights, n_xi, n_p):
    """Flatten a CI measurement set into full-volume rows (pixel-major)."""
    full_rows = (rows[None, :] + n_xi * np.arange(n_p)[:, None]).ravel()
    return values.T.ravel(), full_rows, np.tile(weights, n_p)


def reconstruct_ci(meas, epsilon, config=None, stop_if=None, return_result=False):
    """Reconstruct a volume from coded-illumination samples.

    With the spectral prior every pixel is an independent problem sharing the
    sampled rows and weights (solved together as columns).  With the
    spatio-spectral prior one joint problem is solved whose budget is the sum
    of the per-pixel budgets.
    """
    config = config or ReconConfig()
    if not isinstance(meas, MeasurementSet) or meas.scheme != "CI" or meas.mode != "weighted":
        raise ValueError("reconstruct_ci expects a weighted CI measurement set")
    n_xi, n_p = meas.n_xi, meas.n_p
    rows, weights = meas.plan.draws, meas.plan.weights
    if config.prior == "1d":
        u, res = bpdn_weighted(meas.values, rows, weights, CenteredDFT(n_xi), Haar1D(n_xi),
                               epsilon, config, stop_if)
        return _finish(u, res, config, n_xi, "CI reconstruction", return_result)
    y, full_rows, w = _joint_ci(meas.values, rows, weights, n_xi, n_p)
    sensing = KronOperator(Identity(n_p), CenteredDFT(n_xi))
    sparsity = sparsity_basis(n_xi, n_p, "3d", config.mode2d)
    # joint budget epsilon^2 * M_xi * n_p equals the per-pixel budgets summed
    u, res = bpdn_weighted(y, full_rows, w, sensing, sparsity, epsilon, config, stop_if)
    return _finish(u, res, config, n_xi, "CI reconstruction (3D prior)", return_result)


def reconstruct_si(meas, epsilon, config=None, stop_if=None, return_result=False):
    """Joint reconstruction from structured-illumination samples."""
    config = config or ReconConfig()
    if not isinstance(meas, MeasurementSet) or meas.scheme != "SI":
        raise ValueError("reconstruct_si expects an SI measurement set")
    n_xi, n_p = meas.n_xi, meas.n_p
    sensing = KronOperator(Identity(n_p), CenteredDFT(n_xi))
    sparsity = sparsity_basis(n_xi, n_p, "3d", config.mode2d)
    u, res = bpdn_weighted(meas.values, meas.plan.draws, meas.plan.weights, sensing, sparsity,
                           epsilon, config, stop_if)
    return _finish(u, res, config, n_xi, "SI reconstruction", return_result)


def reconstruct_dedup_ci(meas, epsilon, config=None, stop_if=None, return_result=False):
    """CI reconstruction on unique rows with an unweighted fidelity term.

    The constraint is ``||y - (F^* u)_rows|| <= epsilon * sqrt(M_eff)`` per
    pixel (spectral prior) or summed over pixels (spatio-spectral prior).
    """
    config = config or ReconConfig()
    if not isinstance(meas, MeasurementSet) or meas.mode != "dedup":
        raise ValueError("reconstruct_dedup_ci expects a deduplicated CI measurement set")
    n_xi, n_p = meas.n_xi, meas.n_p
    rows = meas.effective.indices
    ones = np.ones(rows.size)
    if config.prior == "1d":
        u, res = bpdn_weighted(meas.values, rows, ones, CenteredDFT(n_xi), Haar1D(n_xi),
                               epsilon, config, stop_if)
    else:
        y, full_rows, w = _joint_ci(meas.values, rows, ones, n_xi, n_p)
        sensing = KronOperator(Identity(n_p), CenteredDFT(n_xi))
        sparsity = sparsity_basis(n_xi, n_p, "3d", config.mode2d)
        u, res = bpdn_weighted(y, full_rows, w, sensing, sparsity, epsilon, config, stop_if)
    return _finish(u, res, config, n_xi, "dedup CI reconstruction", return_result)


def minimal_energy(meas):
    """Least-norm real volume consistent with the samples.

    A real spectrum has Hermitian interferograms, so every sample also fixes
    its conjugate-frequency partner.  Samples and conjugated partners are
    pooled and averaged, the remaining rows are zero-filled and the inverse
    DFT is applied.
    """
    if not isinstance(meas, MeasurementSet):
        raise TypeError("minimal_energy expects a MeasurementSet")
    n_xi, n_p = meas.n_xi, meas.n_p
    rows = meas.rows
    values = meas.values
    rows = np.concatenate([rows, _mirror_rows(rows, n_xi)])
    values = np.concatenate([values, np.conj(values)])
    ones = np.ones(rows.size)
    uniq, means, _, _ = group_duplicates(values, rows, ones)
    if meas.scheme == "CI":
        full = np.zeros((n_xi, n_p), dtype=complex)
        full[uniq] = means
    else:
        full = np.zeros(n_xi * n_p, dtype=complex)
        full[uniq] = means
        full = full.reshape(n_xi, n_p, order="F")
    return HSVolume(np.real(CenteredDFT(n_xi).matvec(full, axis=0)))


def rsnr(x, x_hat, normalized=False, cap=RSNR_CAP_DB):
    """Reconstruction SNR ``-10 log10(||x - x_hat||^2 / ||x||^2)`` in dB.

    ``normalized=True`` compares unit-norm pixel spectra instead, over the
    pixels whose reference spectrum is nonzero (a zero spectrum has no shape
    to compare).  Exact recovery returns ``cap``.
    """
    x = np.asarray(x.data if isinstance(x, HSVolume) else x, dtype=float)
    x_hat = np.asarray(x_hat.data if isinstance(x_hat, HSVolume) else x_hat)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    if normalized:
        x = x if x.ndim > 1 else x[:, None]
        x_hat = x_hat if x_hat.ndim > 1 else x_hat[:, None]
        keep = np.any(x != 0, axis=0)
        x = _unit_columns(x[:, keep])
        x_hat = _unit_columns(x_hat[:, keep])
    ref = np.sum(np.abs(x) ** 2)
    if ref == 0:
        raise ValueError("reference signal has zero norm")
    err = np.sum(np.abs(x - x_hat) ** 2)
    if err == 0:
        return float(cap)
    return float(min(cap, -10 * np.log10(err / ref)))


def _unit_columns(a):
    a = a if a.ndim > 1 else a[:, None]
    norms = np.linalg.norm(a, axis=0)
    return a / np.where(norms > 0, norms, 1.0)
