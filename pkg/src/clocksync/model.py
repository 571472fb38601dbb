"""Network model: parameters, configurations, moment functionals and the jump kernel.

Node labels follow the usual convention of the model: node 1 is the time
server, nodes 2..N+1 are the sensors.  A configuration is stored as a float
array ``x`` of length N+1 with ``x[0]`` holding the server reading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import DegenerateRatesError, ForbiddenReceiverError, InvalidInputError


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of a homogeneous network.

    Attributes
    ----------
    N : number of sensor nodes.
    r, v : server and sensor clock frequencies.
    sigma : sensor noise strength (seconds per sqrt-second).
    alpha : rate of server messages.
    beta : per-sensor rate of sensor-to-sensor messages.
    """

    N: int
    r: float = 1.0
    v: float = 1.0
    sigma: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise InvalidInputError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("r", "v", "sigma", "alpha", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        for name in ("sigma", "alpha", "beta"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.beta > 0 and self.N < 2:
            raise InvalidInputError("sensor-to-sensor messages (beta > 0) need N >= 2")

    @property
    def skew(self) -> float:
        return self.v - self.r

    def with_N(self, N: int) -> "ModelParams":
        return replace(self, N=N)


class MomentVector(NamedTuple):
    """Desynchronization statistics (R, D, d); entries may be arrays over time."""

    R: float
    D: float
    d: float


class NodePair(NamedTuple):
    """A message (sender, receiver) using 1-based node labels."""

    sender: int
    receiver: int


@dataclass(frozen=True)
class DerivedScalars:
    b: float
    u: float
    alpha_N: float
    beta_N: float
    delta_N: float
    q0: np.ndarray = field(repr=False)
    q1: np.ndarray = field(repr=False)
    q2: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    k_N: float | None = None
    K_matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def defined(self) -> bool:
        """True when the jump operator K (and k_N) exist, i.e. delta_N > 0."""
        return self.K_matrix is not None

    @property
    def k(self) -> float:
        if self.k_N is None:
            raise DegenerateRatesError("k_N is undefined when alpha = beta = 0")
        return self.k_N

    @property
    def K(self) -> np.ndarray:
        if self.K_matrix is None:
            raise DegenerateRatesError("K is undefined when alpha = beta = 0")
        return self.K_matrix


def derived_scalars(params: ModelParams) -> DerivedScalars:
    N = params.N
    b = params.v - params.r
    alpha_N = params.alpha / N
    beta_N = params.beta / (N - 1) if N >= 2 else 0.0
    delta_N = params.alpha + N * params.beta
    sigma2 = params.sigma**2
    L = np.array([[-alpha_N, 0.0], [2.0 * alpha_N, -2.0 * (alpha_N + beta_N)]])
    k_N = None
    K = None
    if delta_N > 0:
        k_N = 1.0 - alpha_N / delta_N
        K = np.eye(2) + L / delta_N
        # keep the (1,1) entry bit-identical to k_N
        K[0, 0] = k_N
    return DerivedScalars(
        b=b,
        u=2.0 * b,
        alpha_N=alpha_N,
        beta_N=beta_N,
        delta_N=delta_N,
        q0=np.array([2.0 * b, 0.0]),
        q1=np.array([sigma2, 2.0 * sigma2]),
        q2=np.array([b * b, 0.0]),
        L=L,
        k_N=k_N,
        K_matrix=K,
    )


def as_config(x) -> np.ndarray:
    """Validate and copy a clock configuration (server reading first)."""
    arr = np.array(x, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidInputError("a configuration needs the server and at least one sensor")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("configuration entries must be finite")
    return arr


def moments_of_config(x) -> MomentVector:
    """Return (R, D, d) for one configuration.

    D averages squared offsets over *ordered* sensor pairs, so it equals
    ``2N/(N-1)`` times the population variance of the sensor readings.
    """
    x = as_config(x)
    N = x.size - 1
    y = x[1:] - x[0]
    R = float(np.mean(y * y))
    d = float(np.mean(y))
    if N < 2:
        return MomentVector(R, 0.0, d)
    # centring on one sensor first makes D exactly 0 for equal sensors
    z = y - y[0]
    z = z - np.mean(z)
    D = float(2.0 * N / (N - 1) * np.mean(z * z))
    return MomentVector(R, D, d)


def _check_pair(pair: NodePair, n_nodes: int) -> NodePair:
    sender, receiver = int(pair[0]), int(pair[1])
    if receiver == 1:
        raise ForbiddenReceiverError("the server never adjusts its clock")
    if not (1 <= sender <= n_nodes and 2 <= receiver <= n_nodes):
        raise InvalidInputError(f"pair {pair!r} out of range for {n_nodes} nodes")
    if sender == receiver:
        raise InvalidInputError("sender and receiver must differ")
    return NodePair(sender, receiver)


def jump_map(x, pair: NodePair) -> np.ndarray:
    """Receiver adopts the sender's reading; all other clocks are unchanged."""
    x = as_config(x)
    sender, receiver = _check_pair(pair, x.size)
    x[receiver - 1] = x[sender - 1]
    return x


def pair_distribution(params: ModelParams) -> list[tuple[NodePair, float]]:
    s = derived_scalars(params)
    if s.delta_N <= 0:
        raise DegenerateRatesError("no messages are sent when alpha = beta = 0")
    N = params.N
    p_server = s.alpha_N / s.delta_N
    p_sensor = s.beta_N / s.delta_N
    out = [(NodePair(1, j), p_server) for j in range(2, N + 2)]
    if p_sensor > 0:
        out += [
            (NodePair(i, j), p_sensor)
            for i in range(2, N + 2)
            for j in range(2, N + 2)
            if i != j
        ]
    return out


def expected_post_jump_moments(x, params: ModelParams) -> MomentVector:
    """Average of the moments after one random jump, by exhaustive enumeration."""
    x = as_config(x)
    if x.size != params.N + 1:
        raise InvalidInputError(f"configuration has {x.size} entries, expected {params.N + 1}")
    acc = np.zeros(3)
    for pair, prob in pair_distribution(params):
        acc += prob * np.asarray(moments_of_config(jump_map(x, pair)))
    return MomentVector(*map(float, acc))
