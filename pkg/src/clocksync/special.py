"""Exponential-type scalar functions and their stable divided differences.

    g1(y) = exp(y)
    g2(y) = (exp(y) - 1) / y
    phi2(y) = (exp(y) - 1 - y) / y**2

``g2_deriv(y, k)`` is the k-th derivative of g2, i.e. the integral of
``s**k * exp(s*y)`` over [0, 1].  All functions accept scalars or arrays.

Divided differences ``dd(g; y, z) = (g(z) - g(y)) / (z - y)`` lose every
significant digit when z is close to y; here they switch to Taylor
expansions about y in that regime.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc

_TAYLOR_TERMS = 24
# relative width below which divided differences use a Taylor expansion
_TAYLOR_WIDTH = 0.1


def g1(y):
    return np.exp(y)


def _g2_scalar(y: float) -> float:
    if y == 0.0:
        return 1.0
    return math.expm1(y) / y


def _phi2_scalar(y: float) -> float:
    if abs(y) < 0.5:
        term, total = 0.5, 0.5
        for j in range(1, 20):
            term *= y / (j + 2)
            total += term
        return total
    return (math.expm1(y) - y) / (y * y)


def _g2_deriv_scalar(y: float, k: int) -> float:
    if -2.0 <= y <= 2.0 or y > 0:
        # series  sum_j y^j / (j! (j+k+1)); all terms positive for y > 0
        n_terms = 40 if y <= 2.0 else int(2 * y) + 60
        term, total = 1.0, 1.0 / (k + 1)
        for j in range(1, n_terms):
            term *= y / j
            total += term / (j + k + 1)
        return total
    # y < -2: regularized lower incomplete gamma
    x = -y
    return float(gammainc(k + 1, x)) * math.exp(math.lgamma(k + 1) - (k + 1) * math.log(x))


def g2(y):
    return np.vectorize(_g2_scalar, otypes=[float])(y)[()]


def phi2(y):
    return np.vectorize(_phi2_scalar, otypes=[float])(y)[()]


def g2_deriv(y, k: int = 1):
    """k-th derivative of g2 (k = 0 gives g2 itself)."""
    return np.vectorize(lambda v: _g2_deriv_scalar(v, k), otypes=[float])(y)[()]


# -- divided differences ----------------------------------------------------


def _dd_exp_scalar(y: float, z: float) -> float:
    return math.exp(y) * _g2_scalar(z - y)


def _dd2_exp_scalar(y: float, z: float) -> float:
    return math.exp(y) * _phi2_scalar(z - y)


def _small(y: float, h: float) -> bool:
    return abs(h) <= _TAYLOR_WIDTH * max(1.0, abs(y))


def _dd_g2_scalar(y: float, z: float) -> float:
    h = z - y
    if _small(y, h):
        total, scale = 0.0, 1.0
        for k in range(_TAYLOR_TERMS):
            scale /= k + 1
            total += _g2_deriv_scalar(y, k + 1) * scale
            scale *= h
        return total
    return (_g2_scalar(z) - _g2_scalar(y)) / h


def _dd2_g2_scalar(y: float, z: float) -> float:
    """(dd(g2; y, z) - g2'(y)) / (z - y)."""
    h = z - y
    if _small(y, h):
        total, scale = 0.0, 0.5
        for k in range(_TAYLOR_TERMS):
            total += _g2_deriv_scalar(y, k + 2) * scale
            scale *= h / (k + 3)
        return total
    return (_dd_g2_scalar(y, z) - _g2_deriv_scalar(y, 1)) / h


def dd_exp(y, z):
    """Divided difference of exp between y and z (derivative when y == z)."""
    return np.vectorize(_dd_exp_scalar, otypes=[float])(y, z)[()]


def dd2_exp(y, z):
    """Confluent second divided difference exp[y, y, z]."""
    return np.vectorize(_dd2_exp_scalar, otypes=[float])(y, z)[()]


def dd_g2(y, z):
    return np.vectorize(_dd_g2_scalar, otypes=[float])(y, z)[()]


def dd2_g2(y, z):
    return np.vectorize(_dd2_g2_scalar, otypes=[float])(y, z)[()]


def divided_difference(g, y, z, gprime=None):
    """Plain ``(g(z) - g(y)) / (z - y)``; ``gprime(y)`` is used when y == z.

    Kept literal on purpose: it is the textbook definition against which the
    stable versions above are tested.
    """
    if y == z:
        if gprime is None:
            raise ValueError("coincident points need the derivative")
        return gprime(y)
    return (g(z) - g(y)) / (z - y)
