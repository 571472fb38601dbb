"""Closed-form moments of the network and the identities behind them.

The expected moments obey the linear system

    d'(t) = -alpha_N d + b
    R'(t) = -alpha_N R + 2 b d + sigma^2
    D'(t) = 2 alpha_N R - 2 (alpha_N + beta_N) D + 2 sigma^2

whose generator ``L`` is lower triangular with eigenvalues
``lambda1 = -alpha_N`` and ``lambda2 = -2(alpha_N + beta_N)``.
``moments_closed_form`` evaluates its exact solution through the functions
of :mod:`clocksync.special`; ``ode_moments`` integrates the system
numerically and serves as an independent check.

Note on the skew terms: the drift enters the R equation through ``u = 2b``
(a free step adds ``2 b dt d`` and ``b^2 dt^2`` to R).  Both skew terms of
the solution therefore carry the factor ``u``; e.g. the stationary R is
``sigma^2/alpha_N + 2 b^2/lambda1^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import special
from .errors import (
    CoincidentEigenvalueError,
    DomainError,
    InvalidInputError,
    NoStationaryLimitError,
)
from .model import DerivedScalars, ModelParams, MomentVector, derived_scalars


@dataclass(frozen=True)
class SpectralData:
    lambda1: float
    lambda2: float
    e1: np.ndarray
    e2: np.ndarray
    w2: float


def spectral(scalars: DerivedScalars) -> SpectralData:
    """Eigenstructure of the moment generator L.

    ``(1, 0) = e1 + w2 * e2`` holds exactly; with alpha = 0 the first
    eigenvalue vanishes and ``w2 = 0``.
    """
    lam1 = -scalars.alpha_N
    lam2 = -2.0 * (scalars.alpha_N + scalars.beta_N)
    if lam1 == lam2:
        raise CoincidentEigenvalueError("L has a double eigenvalue when alpha = beta = 0")
    w2 = -2.0 * lam1 / (lam2 - lam1)
    return SpectralData(
        lambda1=lam1,
        lambda2=lam2,
        e1=np.array([1.0, -w2]),
        e2=np.array([0.0, 1.0]),
        w2=w2,
    )


def _w2(scalars: DerivedScalars) -> float:
    lam1 = -scalars.alpha_N
    lam2 = -2.0 * (scalars.alpha_N + scalars.beta_N)
    if lam1 == lam2:  # only alpha = beta = 0, where the term it multiplies is zero
        return 0.0
    return -2.0 * lam1 / (lam2 - lam1)


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise InvalidInputError("times must be finite and non-negative")
    return t


def d_closed_form(params: ModelParams, d0: float, t):
    """Expected collective displacement; reduces to d0 + (v - r) t when alpha = 0."""
    t = _check_times(t)
    lam1 = -params.alpha / params.N
    y = lam1 * t
    return (d0 * np.exp(y) + params.skew * t * special.g2(y))[()]


def _moments_scalar(s: DerivedScalars, w2: float, R0, D0, d0, t):
    lam1 = -s.alpha_N
    lam2 = -2.0 * (s.alpha_N + s.beta_N)
    y, z = lam1 * t, lam2 * t
    c = 2.0 * s.alpha_N * t  # lower-left entry of t*L
    sig2 = s.q1[0]

    # exp(tL) V0
    R = math.exp(y) * R0
    D = c * special._dd_exp_scalar(y, z) * R0 + math.exp(z) * D0
    # t g2(tL) q1  ==  (-L)^{-1} (Id - exp(tL)) q1
    R += t * special._g2_scalar(y) * sig2
    D += t * (c * special._dd_g2_scalar(y, z) * sig2 + special._g2_scalar(z) * 2.0 * sig2)
    # initial displacement coupling
    coef = s.u * d0 * t
    R += coef * math.exp(y)
    D += coef * w2 * (z - y) * special._dd2_exp_scalar(y, z)
    # skew
    coef = s.u * s.b * t * t
    R += coef * special._g2_deriv_scalar(y, 1)
    D += coef * w2 * (z - y) * special._dd2_g2_scalar(y, z)
    return R, D


def moments_closed_form(params: ModelParams, init: MomentVector, t) -> MomentVector:
    """Exact expected (R, D, d) at time(s) ``t`` from initial moments ``init``.

    Valid for every rate combination, including alpha = 0 and alpha = beta = 0,
    because all exponential differences are evaluated as stable divided
    differences.
    """
    t = _check_times(t)
    s = derived_scalars(params)
    w2 = _w2(s)
    R0, D0, d0 = (float(v) for v in init)
    flat = np.atleast_1d(t).ravel()
    RD = np.array([_moments_scalar(s, w2, R0, D0, d0, float(ti)) for ti in flat])
    R = RD[:, 0].reshape(t.shape)[()]
    D = RD[:, 1].reshape(t.shape)[()]
    return MomentVector(R, D, d_closed_form(params, d0, t))


def moments_eigenbasis_form(params: ModelParams, init: MomentVector, t: float) -> MomentVector:
    """Same law written in the eigenbasis (e1, e2), evaluated literally.

    Uses a general matrix exponential and plain exponential differences, so it
    is only trustworthy away from degenerate spectra.  Requires alpha > 0.
    """
    if params.alpha <= 0:
        raise DomainError("the eigenbasis form needs alpha > 0")
    s = derived_scalars(params)
    sp = spectral(s)
    l1, l2 = sp.lambda1, sp.lambda2
    t = float(t)
    E = expm(s.L * t)
    V0 = np.array([init[0], init[1]], dtype=float)
    V = E @ V0 + np.linalg.solve(-s.L, (np.eye(2) - E) @ s.q1)
    e1t, e2t = math.exp(l1 * t), math.exp(l2 * t)
    V = V + s.u * init[2] * (t * e1t * sp.e1 + (e2t - e1t) / (l2 - l1) * sp.w2 * sp.e2)
    V = V + s.u * s.b * (
        (1 / l1**2 - (1 / l1**2 - t / l1) * e1t) * sp.e1
        + (1 / (l1 * l2) + (e2t / l2 - e1t / l1) / (l2 - l1)) * sp.w2 * sp.e2
    )
    return MomentVector(float(V[0]), float(V[1]), float(d_closed_form(params, init[2], t)))


def moment_derivative(params: ModelParams, state) -> np.ndarray:
    """Right-hand side of the moment ODE for ``state = (R, D, d)``."""
    s = derived_scalars(params)
    R, D, d = state
    return np.array(
        [
            s.L[0, 0] * R + s.u * d + s.q1[0],
            s.L[1, 0] * R + s.L[1, 1] * D + s.q1[1],
            -s.alpha_N * d + s.b,
        ]
    )


def ode_moments(params: ModelParams, init: MomentVector, t_grid, rtol=1e-13) -> MomentVector:
    """Integrate the moment ODE with an 8th-order Runge-Kutta scheme."""
    t_grid = _check_times(t_grid)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) < 0):
        raise InvalidInputError("t_grid must be a sorted 1-d array")
    s = derived_scalars(params)
    A = np.array(
        [
            [s.L[0, 0], 0.0, s.u],
            [s.L[1, 0], s.L[1, 1], 0.0],
            [0.0, 0.0, -s.alpha_N],
        ]
    )
    forcing = np.array([s.q1[0], s.q1[1], s.b])

    def rhs(_, x):
        return A @ x + forcing

    y0 = np.array([init[0], init[1], init[2]], dtype=float)
    out = np.empty((3, t_grid.size))
    start = 0
    # solve_ivp wants t_eval inside (t0, tf]; t = 0 entries are the initial state
    while start < t_grid.size and t_grid[start] == 0.0:
        out[:, start] = y0
        start += 1
    if start < t_grid.size:
        sol = solve_ivp(
            rhs,
            (0.0, float(t_grid[-1])),
            y0,
            method="DOP853",
            t_eval=t_grid[start:],
            rtol=rtol,
            atol=1e-20,
        )
        if not sol.success:
            raise RuntimeError(f"ODE integration failed: {sol.message}")
        out[:, start:] = sol.y
    return MomentVector(out[0], out[1], out[2])


@dataclass(frozen=True)
class StationaryLimits:
    exact: MomentVector
    asymptotic: MomentVector


def stationary_limits(params: ModelParams) -> StationaryLimits:
    """t -> infinity limits for fixed N, and their large-N leading terms."""
    if params.alpha <= 0:
        raise NoStationaryLimitError("no stationary regime without server messages")
    s = derived_scalars(params)
    N, a, bt = params.N, params.alpha, params.beta
    lam1 = -s.alpha_N
    lam2 = -2.0 * (s.alpha_N + s.beta_N)
    sig2 = params.sigma**2
    b2 = s.b**2
    exact = MomentVector(
        sig2 / s.alpha_N + 2.0 * b2 / lam1**2,
        2.0 * sig2 / (s.alpha_N + s.beta_N) + 4.0 * b2 / (lam1 * lam2),
        s.b * N / a,
    )
    asym = MomentVector(
        sig2 * N / a + 2.0 * b2 * N**2 / a**2,
        2.0 * sig2 * N / (a + bt) + 2.0 * b2 * N**2 / (a * (a + bt)),
        s.b * N / a,
    )
    return StationaryLimits(exact, asym)


# -- Poisson identities --------------------------------------------------------


def _is_lower_2x2(A: np.ndarray) -> bool:
    return A.shape == (2, 2) and A[0, 1] == 0.0


def _lower_tri_function(A, f, fprime):
    """f(A) for lower-triangular 2x2 A via a stable divided difference."""
    a, c, bb = A[0, 0], A[1, 0], A[1, 1]
    fa, fb = f(a), f(bb)
    if a == bb:
        dd = fprime(a)
    else:
        dd = (fb - fa) / (bb - a)
    return np.array([[fa, 0.0], [c * dd, fb]])


def poisson_power_expectation(A, delta: float, t: float):
    """Three expectations over Pi ~ Poisson(delta t).

    Returns ``(E A^Pi, E t A^(Pi+1)/(Pi+1), E t^2 A^(Pi+2)/((Pi+1)(Pi+2)))``
    evaluated in closed form.  ``A`` may be a scalar or a square matrix.
    """
    if not delta > 0 or t < 0:
        raise DomainError("need delta > 0 and t >= 0")
    dt = delta * t
    edt = math.exp(-dt)

    # scalar versions written without cancellation
    def f1(a):
        return math.exp(-dt * (1.0 - a))

    def f2(a):
        return edt * t * a * special._g2_scalar(dt * a)

    def f3(a):
        return edt * t * t * a * a * special._phi2_scalar(dt * a)

    # derivatives in a (f2' = t f1, f3' = t f2)
    def d1(a):
        return dt * f1(a)

    def d2(a):
        return t * f1(a)

    def d3(a):
        return t * f2(a)

    A_arr = np.asarray(A, dtype=float)
    if A_arr.ndim == 0:
        a = float(A_arr)
        return f1(a), f2(a), f3(a)
    if A_arr.ndim != 2 or A_arr.shape[0] != A_arr.shape[1]:
        raise InvalidInputError("A must be a scalar or a square matrix")
    if _is_lower_2x2(A_arr):
        h = abs(A_arr[1, 1] - A_arr[0, 0]) * dt
        if h < 1e-4:
            # nearly coincident eigenvalues: derivative at the midpoint plus
            # the cubic Taylor correction
            m = 0.5 * (A_arr[0, 0] + A_arr[1, 1])
            gap = A_arr[1, 1] - A_arr[0, 0]
            out = []
            for f, fp, third in (
                (f1, d1, lambda a: dt**3 * f1(a)),
                (f2, d2, lambda a: t * dt**2 * f1(a)),
                (f3, d3, lambda a: t * t * dt * f1(a)),
            ):
                dd = fp(m) + third(m) * gap * gap / 24.0
                out.append(
                    np.array([[f(A_arr[0, 0]), 0.0], [A_arr[1, 0] * dd, f(A_arr[1, 1])]])
                )
            return tuple(out)
        return tuple(
            _lower_tri_function(A_arr, f, fp) for f, fp in ((f1, d1), (f2, d2), (f3, d3))
        )
    n = A_arr.shape[0]
    I = np.eye(n)
    E = expm(-dt * (I - A_arr))
    return E, (E - edt * I) / delta, (E - (I + dt * A_arr) * edt) / delta**2


def u_functions(a1: float, a2: float, delta: float, t: float, tol: float = 1e-9):
    """The pair (U1, U2) of Poisson-averaged geometric sums.

    U1 = E t/(Pi+1) sum_{j=0}^{Pi} a1^j a2^(Pi-j)
    U2 = E t^2/((Pi+1)(Pi+2)) sum_{i+j<=Pi} a1^j a2^i

    For |a1 - a2| < tol the equal-argument formulas are used at the midpoint.
    """
    for a in (a1, a2):
        if not 0.0 < a < 1.0:
            raise DomainError(f"arguments must lie in (0, 1), got {a!r}")
    if not delta > 0 or t < 0:
        raise DomainError("need delta > 0 and t >= 0")
    dt = delta * t
    if abs(a1 - a2) < tol:
        a = 0.5 * (a1 + a2)
        y = -(1.0 - a) * dt
        U1 = t * math.exp(y)
        U2 = t * t * special._g2_deriv_scalar(y, 1)
        return U1, U2
    y1 = -(1.0 - a1) * dt
    y2 = -(1.0 - a2) * dt
    # U1 = t exp[y1, y2],  U2 = t^2 g2[y1, y2]
    U1 = t * special._dd_exp_scalar(y2, y1)
    U2 = t * t * special._dd_g2_scalar(y2, y1)
    return U1, U2


def u_functions_literal(a1: float, a2: float, delta: float, t: float):
    """The printed closed forms, evaluated as written (no cancellation control)."""
    dt = delta * t
    if a1 == a2:
        a = a1
        U1 = t * math.exp(-(1 - a) * dt)
        U2 = (1 / (1 - a) ** 2 - (1 / (1 - a) ** 2 + dt / (1 - a)) * math.exp(-(1 - a) * dt)) / delta**2
        return U1, U2
    e1 = math.exp(-(1 - a1) * dt)
    e2 = math.exp(-(1 - a2) * dt)
    U1 = (e1 - e2) / (delta * (a1 - a2))
    U2 = (1 / ((1 - a1) * (1 - a2)) - (e1 / (1 - a1) - e2 / (1 - a2)) / (a1 - a2)) / delta**2
    return U1, U2


# -- time-scale coefficient functions ------------------------------------------


def h_functions(c: float, alpha: float, beta: float):
    """Coefficient functions (h_R, h_D) of the effective-synchronization phase.

    Uses the explicit expressions; for small ``alpha*c`` (where they cancel
    catastrophically) the equivalent g2-derivative forms are used instead.
    """
    if not c > 0:
        raise DomainError("c must be positive")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    ac = alpha * c
    if ac < 0.5:
        y = -ac
        z = -2.0 * (alpha + beta) * c
        w = -2.0 * alpha / (alpha + 2.0 * beta)
        h_R = special._g2_deriv_scalar(y, 1)
        h_D = w * (z - y) * special._dd2_g2_scalar(y, z)
        return h_R, h_D
    ea = math.exp(-ac)
    core = 1.0 - (1.0 + ac) * ea
    h_R = core / (ac * ac)
    ab2 = alpha + 2.0 * beta
    h_D = 2.0 / c**2 * core / (alpha * ab2) - 2.0 / c**2 * alpha / ab2 * (
        1.0 / (2.0 * (alpha + beta) * alpha)
        - (ea / alpha - math.exp(-2.0 * (alpha + beta) * c) / (2.0 * (alpha + beta))) / ab2
    )
    return h_R, h_D


def H_coefficient(g, gprime, c: float, alpha: float, beta: float) -> float:
    """Large-N limit of the second-component correction for a function g."""
    y = -alpha * c
    z = -2.0 * (alpha + beta) * c
    return ((g(z) - g(y)) / (z - y) - gprime(y)) * (-2.0 * alpha / (alpha + 2.0 * beta))
