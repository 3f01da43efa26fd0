"""Small special-function kernels used as closed-form oracles."""
from __future__ import annotations

import math

import numpy as np

_INV_E = math.exp(-1.0)


def _w0_scalar(x: float, tol: float) -> float:
    if x < -_INV_E:
        if x > -_INV_E - 1e-15:
            return -1.0
        raise ValueError("principal W is real only for x >= -1/e")
    if x == 0.0:
        return 0.0
    if x <= -_INV_E + 1e-300:
        return -1.0
    # starting values: branch-point series near -1/e, logarithms for large x
    if x < 1.0:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        if x > 0.3:
            w = math.log1p(x) * 0.8
    else:
        lx = math.log(x)
        w = lx - math.log(lx) if x > math.e else 0.6 * lx + 0.5
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= tol * (1.0 + abs(w)):
            break
    return w


def lambert_w0(x, tol: float = 1e-15):
    """Principal branch of Lambert W on ``[-1/e, inf)`` by Halley iteration.

    Parameters
    ----------
    x : float or array_like
        Real arguments with ``x >= -1/e``.
    tol : float
        Relative step tolerance of the Halley iteration.

    Returns
    -------
    float or ndarray
        ``w`` with ``w*exp(w) = x`` and ``w >= -1``.
    """
    if np.ndim(x) == 0:
        return _w0_scalar(float(x), tol)
    arr = np.asarray(x, dtype=float)
    return np.vectorize(lambda t: _w0_scalar(t, tol), otypes=[float])(arr)
