"""Built-in oracle suites.

Every suite compares a closed form against an independent evaluation
(exhaustive enumeration, a truncated Poisson series, an ODE solve) and
reports the worst relative error.  The output text is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import poisson

from . import special
from .analytics import moments_closed_form, ode_moments, poisson_power_expectation, u_functions
from .conditional import ConditionalState, poisson_average_given_count
from .model import ModelParams, MomentVector, derived_scalars, expected_post_jump_moments, moments_of_config

SEED = 20130228


@dataclass(frozen=True)
class SuiteResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.name:<28} max_err={self.max_error:.3e} tol={self.tolerance:.0e} {verdict}"


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), 1e-300)
    return float(np.max(np.abs(a - b) / np.where(np.abs(b) > 0, scale, 1.0)))


def jump_enumeration(perturb_K: float = 0.0, n_configs: int = 20) -> SuiteResult:
    """Post-jump moments by enumeration against (K V, k d)."""
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for N in (2, 3, 5, 10):
        for _ in range(n_configs):
            p = ModelParams(N=N, alpha=rng.uniform(0.1, 5), beta=rng.uniform(0.1, 5))
            s = derived_scalars(p)
            x = rng.normal(size=N + 1)
            R, D, d = moments_of_config(x)
            K = s.K + perturb_K
            V = K @ np.array([R, D])
            got = expected_post_jump_moments(x, p)
            worst = max(worst, _rel(got, [V[0], V[1], s.k * d]))
    return SuiteResult("jump-enumeration", worst, 1e-12)


def _poisson_weights(mu: float):
    # the omitted tail beyond mu + 12 sqrt(mu) + 40 is far below 1e-20
    n = np.arange(int(mu + 12.0 * np.sqrt(mu)) + 40)
    return n, poisson.pmf(n, mu)


def poisson_power_series() -> SuiteResult:
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(20):
        a, delta, t = rng.uniform(0.05, 0.95), rng.uniform(0.5, 10), rng.uniform(0.1, 5)
        n, w = _poisson_weights(delta * t)
        series = (
            np.sum(w * a**n),
            np.sum(w * t * a ** (n + 1) / (n + 1)),
            np.sum(w * t * t * a ** (n + 2) / ((n + 1) * (n + 2))),
        )
        worst = max(worst, _rel(poisson_power_expectation(a, delta, t), series))
    K = derived_scalars(ModelParams(N=2, alpha=1, beta=2)).K
    for t in (0.3, 2.0):
        n, w = _poisson_weights(5 * t)
        powers = [np.linalg.matrix_power(K, m) for m in range(n[-1] + 3)]
        series = (
            sum(wi * powers[m] for m, wi in zip(n, w)),
            sum(wi * t * powers[m + 1] / (m + 1) for m, wi in zip(n, w)),
            sum(wi * t * t * powers[m + 2] / ((m + 1) * (m + 2)) for m, wi in zip(n, w)),
        )
        got = poisson_power_expectation(K, 5.0, t)
        for g, sr in zip(got, series):
            worst = max(worst, float(np.max(np.abs(g - sr))) / float(np.max(np.abs(sr))))
    return SuiteResult("poisson-power-series", worst, 1e-10)


def u_series(a1: float, a2: float, delta: float, t: float):
    """U1, U2 by direct Poisson summation of the geometric sums."""
    n, w = _poisson_weights(delta * t)
    U1 = U2 = 0.0
    for m, wm in zip(n, w):
        j = np.arange(m + 1)
        inner1 = np.sum(a1**j * a2 ** (m - j))
        # sum_{i+j<=m} a1^j a2^i = sum_j a1^j (1 - a2^(m-j+1)) / (1 - a2)
        inner2 = np.sum(a1**j * (1.0 - a2 ** (m - j + 1))) / (1.0 - a2)
        U1 += wm * t / (m + 1) * inner1
        U2 += wm * t * t / ((m + 1) * (m + 2)) * inner2
    return U1, U2


def u_function_series() -> SuiteResult:
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for _ in range(20):
        a1, a2 = rng.uniform(0.05, 0.95, 2)
        delta, t = rng.uniform(0.5, 10), rng.uniform(0.1, 5)
        worst = max(worst, _rel(u_functions(a1, a2, delta, t), u_series(a1, a2, delta, t)))
    # continuity across the equal-argument threshold
    for a in (0.3, 0.8):
        below = u_functions(a, a + 0.999e-9, 4.0, 1.5)
        above = u_functions(a, a + 1.001e-9, 4.0, 1.5)
        worst = max(worst, _rel(below, above))
    return SuiteResult("u-function-series", worst, 1e-10)


TRIANGLE_SETS = (
    ModelParams(N=2, r=1.0, v=2.0, sigma=1.0, alpha=1.0, beta=2.0),
    ModelParams(N=50, r=1.0, v=1.1, sigma=0.5, alpha=2.0, beta=1.0),
)


def closed_ode_count_triangle() -> SuiteResult:
    """Closed form, ODE solve and Poisson-averaged count conditioning must agree."""
    worst = 0.0
    init = MomentVector(0.0, 0.0, 0.0)
    t = np.array([0.5, 5.0, 50.0])
    for p in TRIANGLE_SETS:
        closed = np.array(moments_closed_form(p, init, t))
        ode = np.array(ode_moments(p, init, t))
        count = np.array(
            [poisson_average_given_count(ConditionalState.from_moments(init), p, ti) for ti in t]
        ).T
        worst = max(worst, _rel(ode, closed), _rel(count, closed))
    return SuiteResult("closed-ode-count-triangle", worst, 1e-8)


def exp_function_stability() -> SuiteResult:
    worst = 0.0
    for y in (-1e-4, -3e-7, 0.0, 2e-9, 1e-4):
        taylor_g2 = 1 + y / 2 + y * y / 6 + y**3 / 24 + y**4 / 120
        taylor_phi2 = 0.5 + y / 6 + y * y / 24 + y**3 / 120 + y**4 / 720
        worst = max(worst, abs(special.g2(y) - taylor_g2), abs(special.phi2(y) - taylor_phi2))
    for y in (-30.0, -2.5, -0.4, 0.0, 1.0):
        for h in (1e-12, 1e-7, 1e-3):
            # first-order expansion of the divided difference around y
            ref_exp = np.exp(y) * (1 + h / 2)
            worst = max(worst, abs(special.dd_exp(y, y + h) - ref_exp) / ref_exp - h * h / 5)
            d1 = special.g2_deriv(y, 1)
            d2 = special.g2_deriv(y, 2)
            ref_g2 = d1 + h / 2 * d2
            worst = max(worst, abs(special.dd_g2(y, y + h) - ref_g2) / ref_g2 - h * h)
    return SuiteResult("exp-function-stability", max(worst, 0.0), 1e-13)


SUITES: tuple[Callable[[], SuiteResult], ...] = (
    jump_enumeration,
    poisson_power_series,
    u_function_series,
    closed_ode_count_triangle,
    exp_function_stability,
)


def run_selftest(perturb_K: float = 0.0) -> list[SuiteResult]:
    results = []
    for suite in SUITES:
        if suite is jump_enumeration:
            results.append(suite(perturb_K=perturb_K))
        else:
            results.append(suite())
    return results


def report(results: list[SuiteResult]) -> str:
    lines = [r.line() for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} suites passed")
    return "\n".join(lines) + "\n"
