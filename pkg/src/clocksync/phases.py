"""Large-network time scales: which regime t = s * N**gamma falls in and how the moments scale there.

On the scale t = s N^gamma the mean moments behave like

    R ~ C_R(s, gamma) N^psi_R,    D ~ C_D(s, gamma) N^psi_D

Without skew (v == r) noise drives both moments and the exponents saturate
at 1 once gamma reaches 1.  With skew the drift term dominates R, and D
passes through a cubic crossover around gamma = 1/2 before saturating at
N^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .analytics import h_functions, moments_closed_form
from .errors import InvalidInputError, NoSynchronizationPhaseError
from .model import ModelParams, MomentVector
from .special import g2


@dataclass(frozen=True)
class PhaseQuery:
    gamma: float
    s: float
    params: ModelParams

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError("gamma must be positive")
        if not (math.isfinite(self.s) and self.s > 0):
            raise InvalidInputError("s must be positive")


@dataclass(frozen=True)
class PhaseResult:
    label: str
    psi_R: float
    psi_D: float
    C_R: float
    C_D: float
    phi: float | None  # D exponent with skew; None without skew


def phi(gamma: float) -> float:
    """Growth exponent of D in N on the scale s N^gamma when the clocks are skewed."""
    if gamma <= 0.5:
        return gamma
    if gamma <= 1.0:
        return 3.0 * gamma - 1.0
    return 2.0


def l_R(s: float, alpha: float) -> float:
    return float(g2(-alpha * s))


def l_D(s: float, alpha: float, beta: float) -> float:
    return float((alpha * g2(-alpha * s) + 2.0 * beta * g2(-2.0 * (alpha + beta) * s)) / (alpha + 2.0 * beta))


def _no_skew(q: PhaseQuery) -> PhaseResult:
    g, s, p = q.gamma, q.s, q.params
    sig2 = p.sigma**2
    psi = min(g, 1.0)
    if g < 1:
        return PhaseResult("P1", psi, psi, sig2 * s, 2 * sig2 * s, None)
    if g == 1:
        return PhaseResult(
            "P2", psi, psi, sig2 * s * l_R(s, p.alpha), 2 * sig2 * s * l_D(s, p.alpha, p.beta), None
        )
    return PhaseResult("P3", psi, psi, sig2 / p.alpha, 2 * sig2 / (p.alpha + p.beta), None)


def _skewed(q: PhaseQuery) -> PhaseResult:
    g, s, p = q.gamma, q.s, q.params
    b2 = p.skew**2
    sig2 = p.sigma**2
    a, be = p.alpha, p.beta
    psi_R = min(2 * g, 2.0)
    psi_D = phi(g)
    if g < 1:
        C_R = b2 * s * s
        cubic = 2.0 / 3.0 * a * b2 * s**3
        if g < 0.5:
            label, C_D = "P1a", 2 * sig2 * s
        elif g == 0.5:
            label, C_D = "P1b", 2 * sig2 * s + cubic
        else:
            label, C_D = "P1c", cubic
        return PhaseResult(label, psi_R, psi_D, C_R, C_D, psi_D)
    if g == 1:
        h_R, h_D = h_functions(s, a, be)
        return PhaseResult("P2", psi_R, psi_D, 2 * b2 * s * s * h_R, 2 * b2 * s * s * h_D, psi_D)
    return PhaseResult("P3", psi_R, psi_D, 2 * b2 / a**2, 2 * b2 / (a * (a + be)), psi_D)


def classify(query: PhaseQuery) -> PhaseResult:
    """Phase label, exponents and leading coefficients at (s, gamma).

    Boundaries compare gamma by exact equality: 0.5 and 1 are the only
    crossover points.
    """
    if query.gamma >= 1 and query.params.alpha == 0:
        raise NoSynchronizationPhaseError("without server messages there is no synchronizing time scale")
    if query.params.skew == 0:
        return _no_skew(query)
    return _skewed(query)


def scale_curve(params: ModelParams, gamma: float, s_grid, N: int, init: MomentVector | None = None):
    """Closed-form moments of an N-sensor network at t = s N^gamma for each s."""
    if int(N) != N or N < 2:
        raise InvalidInputError("N must be an integer >= 2")
    s_grid = np.asarray(s_grid, dtype=float).ravel()
    if s_grid.size == 0 or np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise InvalidInputError("s_grid must be positive and strictly increasing")
    if not (math.isfinite(gamma) and gamma >= 0):
        raise InvalidInputError("gamma must be non-negative")
    t = s_grid * float(N) ** gamma
    init = MomentVector(0.0, 0.0, 0.0) if init is None else init
    return t, moments_closed_form(params.with_N(int(N)), init, t)


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    residual: float  # root-mean-square log residual


def fit_log_slope(N_grid, values, se=None) -> SlopeFit:
    """Least-squares slope of log(values) against log(N).

    With standard errors, points are weighted by the inverse variance of
    log(value), i.e. (value / se)^2.
    """
    x = np.log(np.asarray(N_grid, dtype=float))
    y_lin = np.asarray(values, dtype=float)
    if np.any(y_lin <= 0):
        raise InvalidInputError("log-log fit needs positive values")
    y = np.log(y_lin)
    w = np.ones_like(y) if se is None else (y_lin / np.asarray(se, dtype=float)) ** 2
    W = np.sqrt(w)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A * W[:, None], y * W, rcond=None)
    resid = y - (slope * x + intercept)
    return SlopeFit(float(slope), float(intercept), float(math.sqrt(np.mean(resid**2))))


def _check_N_grid(N_grid) -> np.ndarray:
    N = np.unique(np.asarray(N_grid, dtype=float))
    if N.size < 4 or N[0] < 2 or np.any(N != np.round(N)):
        raise InvalidInputError("N_grid needs at least 4 distinct integers >= 2")
    if N[-1] / N[0] < 10:
        raise InvalidInputError("N_grid must span at least a factor of 10")
    return N.astype(int)


def exponent_fit(params: ModelParams, gamma: float, N_grid, s: float, moment: str = "D") -> SlopeFit:
    """Fitted growth exponent of the closed-form moment at t = s N^gamma."""
    index = {"R": 0, "D": 1, "d": 2}[moment]
    N_grid = _check_N_grid(N_grid)
    values = [scale_curve(params, gamma, [s], int(N))[1][index][0] for N in N_grid]
    return fit_log_slope(N_grid, values)
