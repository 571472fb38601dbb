"""Compiled inner loops for the event-driven simulator and the epoch-only estimator.

Random draws per event, in order: inter-event gap, pair selection
uniform(s), then one standard normal for the sender if its clock must be
advanced.  At each observation every sensor draws one normal (index order)
when its clock is behind.  Nothing else touches the generator.
"""

import math

import numpy as np
from numba import njit

NO_EVENTS = -1
EXPONENTIAL = 0
DETERMINISTIC = 1
UNIFORM = 2
GAMMA = 3


@njit(nogil=True, cache=True)
def _gap(gen, kind, p1, p2):
    if kind == EXPONENTIAL:
        return gen.exponential(1.0 / p1)
    if kind == DETERMINISTIC:
        return p1
    if kind == UNIFORM:
        return gen.uniform(p1, p2)
    if kind == GAMMA:
        return gen.gamma(p1, p2)
    return math.inf


@njit(nogil=True, cache=True)
def _advance(gen, x, last, j, t, v, sigma):
    dt = t - last[j]
    if dt > 0.0:
        if sigma > 0.0:
            x[j] += v * dt + sigma * math.sqrt(dt) * gen.standard_normal()
        else:
            x[j] += v * dt
        last[j] = t


@njit(nogil=True, cache=True)
def simulate_replica(gen, x0, r, v, sigma, p_server, kind, p1, p2, obs, t_end, out):
    """Fill ``out[k] = (R, D, d)`` at ``obs[k]``; return the number of events in [0, t_end].

    Sensor clocks are advanced lazily: each keeps its reading and the time of
    that reading, and only the sender of a message or an observation forces a
    Brownian increment.  Independent increments make this exact.
    """
    N = x0.size - 1
    base = x0[0]
    x = x0[1:].copy()
    last = np.zeros(N)
    events = 0
    tau = _gap(gen, kind, p1, p2)
    for k in range(obs.size):
        to = obs[k]
        while tau <= to:
            if gen.random() < p_server:
                j = min(int(gen.random() * N), N - 1)
                x[j] = base + r * tau
            else:
                i = min(int(gen.random() * N), N - 1)
                j = min(int(gen.random() * (N - 1)), N - 2)
                if j >= i:
                    j += 1
                _advance(gen, x, last, i, tau, v, sigma)
                x[j] = x[i]
            last[j] = tau
            events += 1
            tau += _gap(gen, kind, p1, p2)

        server = base + r * to
        s1 = 0.0
        s2 = 0.0
        for j in range(N):
            _advance(gen, x, last, j, to, v, sigma)
            y = x[j] - server
            s1 += y
            s2 += y * y
        out[k, 0] = s2 / N
        out[k, 2] = s1 / N
        if N >= 2:
            ref = x[0]
            m = 0.0
            for j in range(N):
                m += x[j] - ref
            m /= N
            var = 0.0
            for j in range(N):
                z = x[j] - ref - m
                var += z * z
            out[k, 1] = 2.0 * var / (N - 1)
        else:
            out[k, 1] = 0.0

    while tau <= t_end:
        events += 1
        tau += _gap(gen, kind, p1, p2)
    return events


@njit(nogil=True, cache=True)
def epoch_replica(gen, kind, p1, p2, K00, K10, K11, k_N, b, sigma2, R0, D0, d0, obs, out):
    """Conditional moments along one sampled epoch sequence."""
    R, D, d = R0, D0, d0
    q2 = b * b
    q0 = 2.0 * b
    last = 0.0
    tau = _gap(gen, kind, p1, p2)
    for k in range(obs.size):
        to = obs[k]
        while tau <= to:
            dt = tau - last
            Rf = R + dt * dt * q2 + dt * sigma2 + dt * d * q0
            Df = D + 2.0 * dt * sigma2
            R = K00 * Rf
            D = K10 * Rf + K11 * Df
            d = k_N * (d + b * dt)
            last = tau
            tau += _gap(gen, kind, p1, p2)
        dt = to - last
        out[k, 0] = R + dt * dt * q2 + dt * sigma2 + dt * d * q0
        out[k, 1] = D + 2.0 * dt * sigma2
        out[k, 2] = d + b * dt
