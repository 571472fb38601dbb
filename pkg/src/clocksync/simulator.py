"""Event-driven Monte Carlo for the sensor network.

Each replica owns a Philox stream keyed by ``(replica_index << 64) | master_seed``
with the top counter word set to a stream tag (0 for clock trajectories, 1
for epoch-only sampling).  Replica results land in a preallocated array and
are reduced in index order, so the output does not depend on how replicas
are spread over threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import DegenerateRatesError, InvalidInputError
from .model import ModelParams, MomentVector, as_config, derived_scalars, moments_of_config

TRAJECTORY_STREAM = 0
EPOCH_STREAM = 1

_U64 = (1 << 64) - 1


def replica_rng(master_seed: int, replica_index: int, stream: int = TRAJECTORY_STREAM) -> np.random.Generator:
    if not (0 <= master_seed <= _U64):
        raise InvalidInputError("master_seed must fit in 64 unsigned bits")
    key = (int(replica_index) << 64) | int(master_seed)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, int(stream)]))


# -- inter-event laws ----------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """Poisson message flow; ``rate=None`` means the model's total rate delta_N."""

    rate: float | None = None

    def __post_init__(self):
        if self.rate is not None and not (math.isfinite(self.rate) and self.rate > 0):
            raise InvalidInputError("exponential rate must be positive")

    def kernel_args(self, delta_N: float):
        rate = delta_N if self.rate is None else self.rate
        return _kernels.EXPONENTIAL, float(rate), 0.0

    def mean(self, delta_N: float) -> float:
        return 1.0 / (delta_N if self.rate is None else self.rate)


@dataclass(frozen=True)
class Deterministic:
    period: float

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise InvalidInputError("period must be positive")

    def kernel_args(self, delta_N: float):
        return _kernels.DETERMINISTIC, float(self.period), 0.0

    def mean(self, delta_N: float) -> float:
        return self.period


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (0 <= self.low < self.high < math.inf):
            raise InvalidInputError("uniform law needs 0 <= low < high")

    def kernel_args(self, delta_N: float):
        return _kernels.UNIFORM, float(self.low), float(self.high)

    def mean(self, delta_N: float) -> float:
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class Gamma:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0 and math.isfinite(self.shape * self.scale)):
            raise InvalidInputError("gamma law needs positive shape and scale")

    def kernel_args(self, delta_N: float):
        return _kernels.GAMMA, float(self.shape), float(self.scale)

    def mean(self, delta_N: float) -> float:
        return self.shape * self.scale


InterEventLaw = Exponential | Deterministic | Uniform | Gamma


def sample_gaps(law: InterEventLaw, params: ModelParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw inter-event durations outside the compiled loop (for checks)."""
    kind, p1, p2 = law.kernel_args(derived_scalars(params).delta_N)
    if kind == _kernels.EXPONENTIAL:
        return rng.exponential(1.0 / p1, size)
    if kind == _kernels.DETERMINISTIC:
        return np.full(size, p1)
    if kind == _kernels.UNIFORM:
        return rng.uniform(p1, p2, size)
    return rng.gamma(p1, p2, size)


# -- initial conditions -------------------------------------------------------


@dataclass(frozen=True)
class InitialCondition:
    """Sensor offsets from the server at t = 0 (server starts at 0 unless a vector is given).

    kind is "zeros", "vector" (full configuration, server first) or
    "gaussian" (i.i.d. offsets with the given mean and variance).
    """

    kind: str = "zeros"
    values: tuple | None = None
    mean: float = 0.0
    variance: float = 0.0

    @classmethod
    def zeros(cls) -> "InitialCondition":
        return cls()

    @classmethod
    def vector(cls, x) -> "InitialCondition":
        return cls("vector", tuple(as_config(x).tolist()))

    @classmethod
    def gaussian(cls, mean: float, variance: float) -> "InitialCondition":
        return cls("gaussian", mean=float(mean), variance=float(variance))

    def __post_init__(self):
        if self.kind not in ("zeros", "vector", "gaussian"):
            raise InvalidInputError(f"unknown initial condition {self.kind!r}")
        if self.kind == "vector" and self.values is None:
            raise InvalidInputError("vector initial condition needs values")
        if self.kind == "gaussian" and not (math.isfinite(self.mean) and self.variance >= 0):
            raise InvalidInputError("gaussian initial condition needs finite mean and variance >= 0")

    def check(self, N: int):
        if self.kind == "vector" and len(self.values) != N + 1:
            raise InvalidInputError(f"initial vector has {len(self.values)} entries, expected {N + 1}")

    def sample(self, N: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "vector":
            return np.array(self.values, dtype=float)
        x = np.zeros(N + 1)
        if self.kind == "gaussian":
            x[1:] = self.mean + math.sqrt(self.variance) * rng.standard_normal(N)
        return x

    def expected_moments(self, N: int) -> MomentVector:
        if self.kind == "vector":
            return moments_of_config(self.values)
        if self.kind == "gaussian":
            D = 2.0 * self.variance if N >= 2 else 0.0
            return MomentVector(self.mean**2 + self.variance, D, self.mean)
        return MomentVector(0.0, 0.0, 0.0)


# -- configuration and results -----------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    t_end: float
    obs_grid: np.ndarray
    replicas: int = 1
    master_seed: int = 0
    law: InterEventLaw = field(default_factory=Exponential)
    initial: InitialCondition = field(default_factory=InitialCondition)

    def __post_init__(self):
        obs = np.asarray(self.obs_grid, dtype=float).ravel()
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise InvalidInputError("t_end must be finite and non-negative")
        if obs.size == 0 or not np.all(np.isfinite(obs)):
            raise InvalidInputError("obs_grid must be a non-empty list of finite times")
        if np.any(np.diff(obs) <= 0) or obs[0] < 0 or obs[-1] > self.t_end:
            raise InvalidInputError("obs_grid must be strictly increasing within [0, t_end]")
        if isinstance(self.replicas, bool) or int(self.replicas) != self.replicas or self.replicas < 1:
            raise InvalidInputError("replicas must be a positive integer")
        if not (0 <= int(self.master_seed) <= _U64):
            raise InvalidInputError("master_seed must fit in 64 unsigned bits")
        self.initial.check(self.params.N)
        object.__setattr__(self, "obs_grid", obs)
        object.__setattr__(self, "replicas", int(self.replicas))
        object.__setattr__(self, "master_seed", int(self.master_seed))

    def _flow(self):
        """(p_server, kind, p1, p2) for the compiled loops."""
        s = derived_scalars(self.params)
        if s.delta_N == 0:
            if not (isinstance(self.law, Exponential) and self.law.rate is None):
                raise DegenerateRatesError("a message law was given but alpha = beta = 0")
            return 0.0, _kernels.NO_EVENTS, 0.0, 0.0
        # a server message goes to one of N sensors, each pair with prob alpha_N / delta_N
        return (self.params.alpha / s.delta_N, *self.law.kernel_args(s.delta_N))


class Trajectory(NamedTuple):
    t: np.ndarray
    moments: np.ndarray  # shape (len(t), 3): R, D, d
    events: int


@dataclass(frozen=True)
class EnsembleStats:
    t: np.ndarray
    mean: np.ndarray  # (len(t), 3)
    se: np.ndarray  # (len(t), 3); NaN when replicas == 1
    replicas: int

    R_mean = property(lambda self: self.mean[:, 0])
    D_mean = property(lambda self: self.mean[:, 1])
    d_mean = property(lambda self: self.mean[:, 2])
    R_se = property(lambda self: self.se[:, 0])
    D_se = property(lambda self: self.se[:, 1])
    d_se = property(lambda self: self.se[:, 2])

    @classmethod
    def from_samples(cls, t: np.ndarray, samples: np.ndarray) -> "EnsembleStats":
        n = samples.shape[0]
        mean = samples.mean(axis=0)
        if n > 1:
            se = samples.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            se = np.full_like(mean, np.nan)
        return cls(np.asarray(t, dtype=float), mean, se, n)


# -- single steps and replicas --------------------------------------------------


def free_step(config, delta_t: float, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Advance every clock by ``delta_t`` under the free dynamics (exact Gaussian increment)."""
    if not delta_t >= 0:
        raise InvalidInputError("delta_t must be non-negative")
    x = as_config(config)
    if delta_t == 0:
        return x
    x[0] += params.r * delta_t
    x[1:] += params.v * delta_t
    if params.sigma > 0:
        x[1:] += params.sigma * math.sqrt(delta_t) * rng.standard_normal(x.size - 1)
    return x


def _replica_into(cfg: SimConfig, flow, index: int, out: np.ndarray) -> int:
    p = cfg.params
    gen = replica_rng(cfg.master_seed, index, TRAJECTORY_STREAM)
    x0 = cfg.initial.sample(p.N, gen)
    p_server, kind, p1, p2 = flow
    return _kernels.simulate_replica(
        gen, x0, p.r, p.v, p.sigma, p_server, kind, p1, p2, cfg.obs_grid, float(cfg.t_end), out
    )


def run_replica(cfg: SimConfig, replica_index: int) -> Trajectory:
    out = np.empty((cfg.obs_grid.size, 3))
    events = _replica_into(cfg, cfg._flow(), replica_index, out)
    return Trajectory(cfg.obs_grid.copy(), out, int(events))


def _parallel(n: int, work: Callable[[int], None], threads: int | None) -> None:
    threads = max(1, int(threads or os.cpu_count() or 1))
    if threads == 1 or n < 2:
        for i in range(n):
            work(i)
        return
    n_chunks = min(n, threads * 8)
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)

    def chunk(c):
        for i in range(bounds[c], bounds[c + 1]):
            work(i)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(chunk, range(n_chunks)))


def run_ensemble(cfg: SimConfig, threads: int | None = None) -> EnsembleStats:
    flow = cfg._flow()
    samples = np.empty((cfg.replicas, cfg.obs_grid.size, 3))
    _parallel(cfg.replicas, lambda i: _replica_into(cfg, flow, i, samples[i]), threads)
    return EnsembleStats.from_samples(cfg.obs_grid, samples)
