"""Moment recursion conditioned on the message epochs.

Given the epochs ``0 < tau_1 < ... < tau_n < t`` the conditional expectations
of ``V = (R, D)`` and ``d`` evolve by two exact affine maps:

* a free step over an interval of length ``dt``::

      d -> d + b dt
      V -> V + dt^2 q2 + dt q1 + dt d q0

* a synchronizing jump::

      d -> k_N d
      V -> K V

Everything here is law-agnostic except ``conditional_given_count``, which
integrates out the epochs of a Poisson flow given their number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import poisson

from . import _kernels
from .errors import InvalidInputError
from .model import DerivedScalars, ModelParams, MomentVector, derived_scalars
from .simulator import EPOCH_STREAM, EnsembleStats, SimConfig, _parallel, replica_rng


class ConditionalState(NamedTuple):
    V: np.ndarray  # (R, D)
    d: float

    @classmethod
    def from_moments(cls, m: MomentVector) -> "ConditionalState":
        return cls(np.array([m[0], m[1]], dtype=float), float(m[2]))


@dataclass(frozen=True)
class EpochSequence:
    taus: np.ndarray
    horizon: float

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float).ravel()
        if taus.size and (
            not np.all(np.isfinite(taus))
            or taus[0] <= 0
            or np.any(np.diff(taus) <= 0)
            or taus[-1] >= self.horizon
        ):
            raise InvalidInputError("epochs must be strictly increasing inside (0, horizon)")
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def gaps(self) -> np.ndarray:
        """Interval lengths, the last one ending at the horizon."""
        return np.diff(np.concatenate(([0.0], self.taus, [self.horizon])))


def free_moment_step(state: ConditionalState, delta_t: float, scalars: DerivedScalars) -> ConditionalState:
    if delta_t < 0:
        raise InvalidInputError("delta_t must be non-negative")
    V = state.V + delta_t * delta_t * scalars.q2 + delta_t * scalars.q1 + delta_t * state.d * scalars.q0
    return ConditionalState(V, state.d + scalars.b * delta_t)


def jump_moment_step(state: ConditionalState, scalars: DerivedScalars) -> ConditionalState:
    return ConditionalState(scalars.K @ state.V, scalars.k * state.d)


def conditional_moments(
    init: ConditionalState, epochs: EpochSequence, scalars: DerivedScalars
) -> ConditionalState:
    """Expected (V, d) at the horizon given the epochs."""
    gaps = epochs.gaps
    state = ConditionalState(np.asarray(init.V, dtype=float), float(init.d))
    if gaps.size > 1:
        scalars.K  # raises early when K is undefined
    for gap in gaps[:-1]:
        state = jump_moment_step(free_moment_step(state, gap, scalars), scalars)
    return free_moment_step(state, gaps[-1], scalars)


# -- sums of powers of the two eigenvalues of K ---------------------------------
#
# Eigenvalues are passed as p = 1 - a, which is known to full relative
# precision even when a is within 1e-10 of one.

_CLOSED_FORM_GAP = 1e-3


def _pow(p: float, m):
    if p < 0.5:
        return np.exp(np.multiply(m, math.log1p(-p)))
    return np.power(1.0 - p, m)


def _geom(p: float, m):
    """sum_{j=0}^{m} (1-p)^j."""
    m = np.asarray(m)
    if p == 0.0:
        return (m + 1.0)[()]
    if p < 0.5:
        return (-np.expm1((m + 1.0) * math.log1p(-p)) / p)[()]
    return ((1.0 - np.power(1.0 - p, m + 1.0)) / p)[()]


def _separated(px: float, py: float) -> bool:
    return abs(px - py) > _CLOSED_FORM_GAP * max(abs(1.0 - px), abs(1.0 - py), 1e-300)


def power_pair_sum(px: float, py: float, n: int) -> float:
    """sum_{i=0}^{n} x^i y^(n-i) with x = 1 - px, y = 1 - py."""
    if _separated(px, py):
        return float((_pow(px, n + 1) - _pow(py, n + 1)) / (py - px))
    i = np.arange(n + 1)
    return float(np.sum(_pow(px, i) * _pow(py, n - i)))


def triangle_sum(px: float, py: float, n: int) -> float:
    """sum over i + j <= n of x^i y^j."""
    if _separated(px, py):
        return float((_geom(px, n + 1) - _geom(py, n + 1)) / (py - px))
    i = np.arange(n + 1)
    return float(np.sum(_pow(px, i) * _geom(py, n - i)))


def _eigen_rates(scalars: DerivedScalars):
    scalars.K  # raises DegenerateRatesError when undefined
    p1 = scalars.alpha_N / scalars.delta_N
    p2 = 2.0 * (scalars.alpha_N + scalars.beta_N) / scalars.delta_N
    lam1 = -scalars.alpha_N
    lam2 = -2.0 * (scalars.alpha_N + scalars.beta_N)
    w2 = -2.0 * lam1 / (lam2 - lam1)
    return p1, p2, w2


def conditional_given_count(init: ConditionalState, n: int, t: float, scalars: DerivedScalars) -> np.ndarray:
    """E(V(x(t)) | Pi_t = n) for a Poisson message flow.

    Given the count, the epochs are sorted uniforms on (0, t), so every gap
    has mean t/(n+1), second moment 2t^2/((n+1)(n+2)) and distinct gaps have
    mixed moment t^2/((n+1)(n+2)).  The remaining matrix sums are taken in
    the eigenbasis of K.
    """
    n = int(n)
    if n < 0 or not t > 0:
        raise InvalidInputError("need n >= 0 and t > 0")
    p1, p2, w2 = _eigen_rates(scalars)
    V0 = np.asarray(init.V, dtype=float)
    d0 = float(init.d)
    s1 = t / (n + 1)
    s11 = t * t / ((n + 1) * (n + 2))

    def through_K(c1, c2, v):
        # P diag(c1, c2) P^{-1} v with P = [e1 e2], e1 = (1, -w2), e2 = (0, 1)
        a, bcoef = v[0], w2 * v[0] + v[1]
        return np.array([c1 * a, -w2 * c1 * a + c2 * bcoef])

    x1n = float(_pow(p1, n))
    V = through_K(x1n, float(_pow(p2, n)), V0)
    V = V + s1 * through_K(float(_geom(p1, n)), float(_geom(p2, n)), scalars.q1)
    # (1, 0) = e1 + w2 e2
    e1 = np.array([1.0, -w2])
    e2 = np.array([0.0, 1.0])
    V = V + scalars.u * d0 * (t * x1n * e1 + s1 * w2 * power_pair_sum(p2, p1, n) * e2)
    V = V + scalars.u * scalars.b * s11 * (triangle_sum(p1, p1, n) * e1 + w2 * triangle_sum(p2, p1, n) * e2)
    return V


def displacement_given_count(init: ConditionalState, n: int, t: float, scalars: DerivedScalars) -> float:
    p1 = scalars.alpha_N / scalars.delta_N
    return float(_pow(p1, n) * init.d + scalars.b * t / (n + 1) * _geom(p1, n))


def poisson_average_given_count(
    init: ConditionalState, params: ModelParams, t: float, tail: float = 1e-14
) -> MomentVector:
    """Average ``conditional_given_count`` over Pi_t ~ Poisson(delta_N t).

    The count range is cut where each omitted tail holds less than
    ``tail / 2`` of the probability mass.
    """
    scalars = derived_scalars(params)
    if t == 0:
        return MomentVector(float(init.V[0]), float(init.V[1]), float(init.d))
    mu = scalars.delta_N * t
    lo = int(poisson.ppf(tail / 2, mu))
    hi = int(poisson.isf(tail / 2, mu)) + 1
    counts = np.arange(lo, hi + 1)
    weights = poisson.pmf(counts, mu)
    acc = np.zeros(3)
    for n, w in zip(counts, weights):
        V = conditional_given_count(init, n, t, scalars)
        acc += w * np.array([V[0], V[1], displacement_given_count(init, n, t, scalars)])
    acc /= weights.sum()
    return MomentVector(*map(float, acc))


def rao_blackwell_ensemble(
    init: ConditionalState | MomentVector | None, simcfg: SimConfig, threads: int | None = None
) -> EnsembleStats:
    """Average the epoch-conditional moments over sampled message epochs.

    Only event times are drawn; the clock noise and the random pairs are
    integrated out exactly.  ``init=None`` takes the expected initial moments
    of ``simcfg.initial``.  Streams are disjoint from the trajectory streams
    of the same seed.
    """
    if init is None:
        init = ConditionalState.from_moments(simcfg.initial.expected_moments(simcfg.params.N))
    elif not isinstance(init, ConditionalState):
        init = ConditionalState.from_moments(init)
    s = derived_scalars(simcfg.params)
    _, kind, p1, p2 = simcfg._flow()
    if kind == _kernels.NO_EVENTS:
        K00 = K10 = K11 = k_N = 1.0
    else:
        K00, K10, K11, k_N = s.K[0, 0], s.K[1, 0], s.K[1, 1], s.k
    sigma2 = simcfg.params.sigma ** 2
    R0, D0 = map(float, init.V)
    samples = np.empty((simcfg.replicas, simcfg.obs_grid.size, 3))

    def one(i):
        gen = replica_rng(simcfg.master_seed, i, EPOCH_STREAM)
        _kernels.epoch_replica(
            gen, kind, p1, p2, K00, K10, K11, k_N, s.b, sigma2, R0, D0, float(init.d),
            simcfg.obs_grid, samples[i],
        )

    _parallel(simcfg.replicas, one, threads)
    return EnsembleStats.from_samples(simcfg.obs_grid, samples)
