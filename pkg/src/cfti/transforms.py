"""Orthonormal transforms: centered DFT, 1D/2D Haar wavelets and Kronecker pairs.

Every transform is exposed as a small basis object holding a square
orthonormal matrix ``T`` (never materialised unless ``dense()`` is called)
with two axis-aware actions:

* ``matvec(x, axis)``  computes ``T @ x`` along ``axis``
* ``rmatvec(x, axis)`` computes ``T^* @ x`` along ``axis``

For :class:`CenteredDFT` the matrix is the Fourier basis ``F`` whose columns
are the complex exponentials, so the interferometric acquisition ``F^* x`` is
``rmatvec`` (and :func:`dft_forward`).  For the Haar bases the matrix is the
synthesis operator ``Psi``; analysis is ``rmatvec``.

Index conventions (0-based arrays):

* row ``i`` of ``F^*`` carries the frequency ``k = i - (n/2 - 1)``, so the DC
  row sits at array index ``n/2 - 1`` (1-based row ``n/2``);
* the sample axis is centred the same way, which makes the transform of a
  volume obeying ``x[i] == x[n - 2 - i]`` real;
* Haar coefficients are ordered scaling function first, then wavelets from
  the coarsest to the finest resolution, positions increasing.
"""

import numpy as np

from ._validation import check_power_of_two

__all__ = [
    "CenteredDFT",
    "Haar1D",
    "Haar2D",
    "Identity",
    "KronOperator",
    "dft_forward",
    "dft_adjoint",
    "haar1d_analysis",
    "haar1d_synthesis",
    "haar2d_analysis",
    "haar2d_synthesis",
    "kron_apply",
    "kron_adjoint",
    "dc_index",
    "frequencies",
]

_SQRT2 = np.sqrt(2.0)


def dc_index(n):
    """0-based array index of the zero frequency (1-based row ``n/2``)."""
    return n // 2 - 1


def frequencies(n):
    """Signed frequency ``k = l - n/2`` of every row, for 1-based rows ``l``."""
    return np.arange(n) - dc_index(n)


def _along(x, axis, func):
    """Apply ``func`` to a 2D view with ``axis`` first and all others flattened."""
    x = np.asarray(x)
    moved = np.moveaxis(x, axis, 0)
    shape = moved.shape
    out = func(moved.reshape(shape[0], -1))
    return np.moveaxis(out.reshape((out.shape[0],) + shape[1:]), 0, axis)


class Identity:
    """Dirac basis of dimension ``n``."""

    kind = "identity"

    def __init__(self, n):
        self.n = int(n)

    def matvec(self, x, axis=0):
        return np.asarray(x)

    def rmatvec(self, x, axis=0):
        return np.asarray(x)

    def dense(self):
        return np.eye(self.n)

    def __repr__(self):
        return f"Identity({self.n})"


class CenteredDFT:
    """Unitary DFT basis with centred frequency and sample indices."""

    kind = "dft"

    def __init__(self, n):
        self.n = check_power_of_two(n, "n", minimum=2)
        c = dc_index(self.n)
        k = frequencies(self.n)
        # (F^* x)[i] = exp(2j pi k_i c / n) * fft(x)[k_i mod n] / sqrt(n)
        self._bins = np.mod(k, self.n)
        self._phase = np.exp(2j * np.pi * k * c / self.n) / np.sqrt(self.n)

    def rmatvec(self, x, axis=0):
        """``F^* x``: samples -> centred spectrum (the acquisition direction)."""

        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
            return np.fft.fft(a, axis=0)[self._bins] * self._phase[:, None]

        return _along(x, axis, op)

    def matvec(self, y, axis=0):
        """``F y``: inverse of :meth:`rmatvec`."""

        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
            spec = np.empty_like(a, dtype=complex)
            spec[self._bins] = a * np.conj(self._phase)[:, None]
            return np.fft.ifft(spec, axis=0) * self.n

        return _along(y, axis, op)

    def dense(self):
        """Dense ``F`` (columns are the exponentials); test oracle only."""
        idx = np.arange(self.n) - dc_index(self.n)
        return np.exp(2j * np.pi * np.outer(idx, idx) / self.n) / np.sqrt(self.n)

    def __repr__(self):
        return f"CenteredDFT({self.n})"


def _haar_analysis_axis0(a):
    n = a.shape[0]
    approx = a.astype(np.result_type(a.dtype, float), copy=True)
    details = []
    while n > 1:
        even, odd = approx[0::2], approx[1::2]
        details.append((even - odd) / _SQRT2)
        approx = (even + odd) / _SQRT2
        n //= 2
    return np.concatenate([approx] + details[::-1], axis=0)


def _haar_synthesis_axis0(c):
    n = c.shape[0]
    approx = c[:1]
    pos = 1
    while pos < n:
        d = c[pos:2 * pos]
        out = np.empty((2 * pos,) + c.shape[1:], dtype=np.result_type(c.dtype, float))
        out[0::2] = (approx + d) / _SQRT2
        out[1::2] = (approx - d) / _SQRT2
        approx = out
        pos *= 2
    return approx.copy()


class Haar1D:
    """Orthonormal 1D Haar basis of dimension ``n = 2**n_bar``."""

    kind = "haar1d"

    def __init__(self, n):
        self.n = check_power_of_two(n, "n")
        self.n_bar = self.n.bit_length() - 1

    def rmatvec(self, x, axis=0):
        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
            return _haar_analysis_axis0(a)

        return _along(x, axis, op)

    def matvec(self, c, axis=0):
        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
            return _haar_synthesis_axis0(a)

        return _along(c, axis, op)

    def dense(self):
        return self.matvec(np.eye(self.n))

    def __repr__(self):
        return f"Haar1D({self.n})"


# Images are handled as arrays [..., t2, t1] so that a C-order flatten of the
# last two axes enumerates pixels column-major (t1 fastest), matching vec(X).

def _iso_analysis(img):
    side = img.shape[-1]
    approx = img.astype(np.result_type(img.dtype, float), copy=True)
    levels = []
    m = side
    lead = img.shape[:-2]
    while m > 1:
        lo1 = (approx[..., 0::2] + approx[..., 1::2]) / _SQRT2   # low along t1
        hi1 = (approx[..., 0::2] - approx[..., 1::2]) / _SQRT2
        ll = (lo1[..., 0::2, :] + lo1[..., 1::2, :]) / _SQRT2
        lh = (lo1[..., 0::2, :] - lo1[..., 1::2, :]) / _SQRT2  # low t1, high t2
        hl = (hi1[..., 0::2, :] + hi1[..., 1::2, :]) / _SQRT2  # high t1, low t2
        hh = (hi1[..., 0::2, :] - hi1[..., 1::2, :]) / _SQRT2
        levels.append([b.reshape(lead + (-1,)) for b in (lh, hl, hh)])
        approx = ll
        m //= 2
    parts = [approx.reshape(lead + (1,))]
    for blocks in levels[::-1]:
        parts.extend(blocks)
    return np.concatenate(parts, axis=-1)


def _iso_synthesis(coef, side):
    lead = coef.shape[:-1]
    dtype = np.result_type(coef.dtype, float)
    approx = coef[..., :1].reshape(lead + (1, 1))
    pos = 1
    m = 1
    while m < side:
        size = m * m
        lh = coef[..., pos:pos + size].reshape(lead + (m, m))
        hl = coef[..., pos + size:pos + 2 * size].reshape(lead + (m, m))
        hh = coef[..., pos + 2 * size:pos + 3 * size].reshape(lead + (m, m))
        pos += 3 * size
        lo1 = np.empty(lead + (2 * m, m), dtype=dtype)
        hi1 = np.empty(lead + (2 * m, m), dtype=dtype)
        lo1[..., 0::2, :] = (approx + lh) / _SQRT2
        lo1[..., 1::2, :] = (approx - lh) / _SQRT2
        hi1[..., 0::2, :] = (hl + hh) / _SQRT2
        hi1[..., 1::2, :] = (hl - hh) / _SQRT2
        out = np.empty(lead + (2 * m, 2 * m), dtype=dtype)
        out[..., 0::2] = (lo1 + hi1) / _SQRT2
        out[..., 1::2] = (lo1 - hi1) / _SQRT2
        approx = out
        m *= 2
    return approx


class Haar2D:
    """Orthonormal 2D Haar basis on ``side x side`` images (``side**2`` pixels).

    ``mode="isotropic"`` uses identical scales in both directions (three
    detail orientations per level); ``mode="anisotropic"`` is the Kronecker
    product ``Haar1D(side) (x) Haar1D(side)``.
    """

    kind = "haar2d"

    def __init__(self, side, mode="isotropic"):
        self.side = check_power_of_two(side, "side")
        if mode not in ("isotropic", "anisotropic"):
            raise ValueError(f"mode must be 'isotropic' or 'anisotropic', got {mode!r}")
        self.mode = mode
        self.n = self.side * self.side
        self._h1 = Haar1D(self.side)

    def _images(self, a):
        if a.shape[0] != self.n:
            raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
        # (n, rest) -> (rest, t2, t1)
        return a.T.reshape(-1, self.side, self.side)

    def rmatvec(self, x, axis=0):
        def op(a):
            imgs = self._images(a)
            if self.mode == "isotropic":
                coef = _iso_analysis(imgs)
            else:
                coef = self._h1.rmatvec(self._h1.rmatvec(imgs, axis=2), axis=1)
                coef = coef.reshape(imgs.shape[0], -1)
            return coef.reshape(imgs.shape[0], -1).T

        return _along(x, axis, op)

    def matvec(self, c, axis=0):
        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"expected length {self.n} along axis, got {a.shape[0]}")
            coef = a.T
            if self.mode == "isotropic":
                imgs = _iso_synthesis(coef, self.side)
            else:
                imgs = coef.reshape(-1, self.side, self.side)
                imgs = self._h1.matvec(self._h1.matvec(imgs, axis=2), axis=1)
            return imgs.reshape(coef.shape[0], -1).T

        return _along(c, axis, op)

    def dense(self):
        return self.matvec(np.eye(self.n))

    def __repr__(self):
        return f"Haar2D({self.side}, mode={self.mode!r})"


class KronOperator:
    """``left (x) right`` acting on ``vec(X)`` with ``X`` of shape (right.n, left.n).

    ``apply`` computes ``(L (x) R) vec(X) = vec(R X L^T)`` and ``adjoint`` the
    conjugate transpose, without forming the Kronecker matrix.
    """

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.shape2d = (right.n, left.n)
        self.n = right.n * left.n

    def _as_matrix(self, x):
        x = np.asarray(x)
        if x.shape == self.shape2d:
            return x, False
        if x.ndim == 1 and x.size == self.n:
            return x.reshape(self.shape2d, order="F"), True
        raise ValueError(f"dimension mismatch: expected {self.n} entries or shape {self.shape2d}, got {x.shape}")

    def apply(self, x):
        X, flat = self._as_matrix(x)
        Y = self.left.matvec(self.right.matvec(X, axis=0), axis=1)
        return Y.ravel(order="F") if flat else Y

    def adjoint(self, y):
        Y, flat = self._as_matrix(y)
        X = self.left.rmatvec(self.right.rmatvec(Y, axis=0), axis=1)
        return X.ravel(order="F") if flat else X

    def _batched(self, x, axis, right_op, left_op):
        def op(a):
            if a.shape[0] != self.n:
                raise ValueError(f"dimension mismatch: expected {self.n}, got {a.shape[0]}")
            # vec index r + R*c  ->  cube[c, r, batch]
            cube = a.reshape(self.left.n, self.right.n, -1)
            cube = left_op(right_op(cube, axis=1), axis=0)
            return cube.reshape(self.n, -1)

        return _along(x, axis, op)

    def matvec(self, x, axis=0):
        return self._batched(x, axis, self.right.matvec, self.left.matvec)

    def rmatvec(self, y, axis=0):
        return self._batched(y, axis, self.right.rmatvec, self.left.rmatvec)

    def dense(self):
        return np.kron(self.left.dense(), self.right.dense())

    def __repr__(self):
        return f"KronOperator({self.left!r}, {self.right!r})"


def dft_forward(x):
    """Centred unitary DFT ``F^* x`` of a length-``n`` vector (``n`` a power of two)."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("dft_forward expects a vector")
    return CenteredDFT(x.size).rmatvec(x)


def dft_adjoint(y):
    """Inverse of :func:`dft_forward`, i.e. ``F y``."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("dft_adjoint expects a vector")
    return CenteredDFT(y.size).matvec(y)


def haar1d_analysis(x):
    x = np.asarray(x)
    return Haar1D(x.shape[0]).rmatvec(x)


def haar1d_synthesis(c):
    c = np.asarray(c)
    return Haar1D(c.shape[0]).matvec(c)


def haar2d_analysis(img, mode="isotropic"):
    """Haar coefficients of a square image.

    ``img[t1, t2]`` is indexed by the two pixel coordinates; the result is the
    coefficient vector of length ``side**2`` (scaling coefficient first).
    """
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"expected a square image, got shape {img.shape}")
    return Haar2D(img.shape[0], mode).rmatvec(img.ravel(order="F"))


def haar2d_synthesis(coef, mode="isotropic"):
    coef = np.asarray(coef)
    side = int(round(np.sqrt(coef.size)))
    if side * side != coef.size:
        raise ValueError("coefficient count must be a square number")
    return Haar2D(side, mode).matvec(coef).reshape(side, side, order="F")


def kron_apply(op, x):
    return op.apply(x)


def kron_adjoint(op, y):
    return op.adjoint(y)
