"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


def is_power_of_two(n):
    return isinstance(n, numbers.Integral) and n >= 1 and (n & (n - 1)) == 0


def check_power_of_two(n, name="n", minimum=1):
    if isinstance(n, (bool, np.bool_)) or not isinstance(n, numbers.Integral):
        raise ValueError(f"{name} must be an integer power of two, got {n!r}")
    n = int(n)
    if not is_power_of_two(n) or n < minimum:
        raise ValueError(f"{name} must be a power of two >= {minimum}, got {n}")
    return n


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        kind = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {kind}, got {value}")
    return value


def check_vector(x, name="x", allow_complex=True):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not allow_complex and np.iscomplexobj(x):
        raise ValueError(f"{name} must be real")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_volume_array(data, n_xi=None, n_p=None):
    """Validate an (n_xi, n_p) spectral-by-pixel matrix.

    ``n_p`` must be a square number whose side is a power of two so that
    2D wavelet priors can be applied to every spectral band.
    """
    data = np.asarray(data)
    if data.ndim != 2:
        raise ValueError(f"volume data must be 2D (n_xi, n_p), got shape {data.shape}")
    rows, cols = data.shape
    check_power_of_two(rows, "n_xi", minimum=2)
    side = int(round(np.sqrt(cols)))
    if side * side != cols or not is_power_of_two(side):
        raise ValueError(f"pixel count must be side**2 with side a power of two, got {cols}")
    if n_xi is not None and rows != n_xi:
        raise ValueError(f"expected n_xi={n_xi}, got {rows}")
    if n_p is not None and cols != n_p:
        raise ValueError(f"expected n_p={n_p}, got {cols}")
    if not np.all(np.isfinite(data)):
        raise ValueError("volume data contains non-finite values")
    return data


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"cannot build a Generator from {seed!r}")
