"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS/FAIL`` line; the lines are
repeated in the terminal summary.  Run standalone with
``python3 tests/test_acceptance.py``.
"""

import csv
import json
import math
import sys

import numpy as np
import pytest

from clocksync import (
    ConditionalState,
    ModelParams,
    MomentVector,
    SimConfig,
    d_closed_form,
    derived_scalars,
    expected_post_jump_moments,
    exponent_fit,
    h_functions,
    moments_closed_form,
    moments_of_config,
    ode_moments,
    phi,
    poisson_average_given_count,
    poisson_power_expectation,
    rao_blackwell_ensemble,
    scale_curve,
    u_functions,
)
from clocksync.cli import main
from clocksync.selftest import u_series

SEED = 20130228
ZERO = MomentVector(0.0, 0.0, 0.0)

SMALL = dict(N=2, r=1.0, sigma=1.0, alpha=1.0, beta=2.0)
WIDE = ModelParams(N=50, r=1.0, v=1.1, sigma=0.5, alpha=2.0, beta=1.0)
SMALL_SKEWED = ModelParams(**SMALL, v=2.0)
SIM_TIMES = [10.0, 50.0, 200.0]
REPLICAS = 20_000


def max_rel(a, b):
    """Largest relative deviation, reading 0 vs 0 as exact."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diff = np.abs(a - b)
    scale = np.abs(b)
    return float(np.max(np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), diff)))


def fmt(values):
    return ", ".join(f"{v:.9g}" for v in values)


# -- shared ensemble run ------------------------------------------------------


def write_sim_config(path, t_end=200.0, obs=SIM_TIMES):
    doc = {
        "version": 1,
        "params": {"N": WIDE.N, "r": WIDE.r, "v": WIDE.v, "sigma": WIDE.sigma,
                   "alpha": WIDE.alpha, "beta": WIDE.beta},
        "simulation": {"t_end": t_end, "obs_grid": obs, "replicas": REPLICAS, "seed": SEED},
    }
    path.write_text(json.dumps(doc))
    return str(path)


def simulate_csv(config, out, threads):
    rc = main(["simulate", "--config", config, "--out", str(out), "--threads", str(threads)])
    assert rc == 0
    return out.read_bytes()


@pytest.fixture(scope="module")
def ensemble(tmp_path_factory):
    """The criterion-3 run at one thread: (config path, csv bytes, parsed table)."""
    d = tmp_path_factory.mktemp("ensemble")
    config = write_sim_config(d / "run.json")
    raw = simulate_csv(config, d / "t1.csv", threads=1)
    with open(d / "t1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return config, raw, rows


# -- criteria -----------------------------------------------------------------


def test_criterion_01_stationary_limits(verdict):
    t = [1e4]
    got_sync = np.ravel(moments_closed_form(ModelParams(**SMALL, v=1.0), ZERO, t))
    got_skew = np.ravel(moments_closed_form(ModelParams(**SMALL, v=2.0), ZERO, t))
    err_sync = max_rel(got_sync, [2.0, 0.8, 0.0])
    err_skew = max_rel(got_skew, [6.0, 1.6, 2.0])
    ok = err_sync <= 1e-6 and err_skew <= 1e-6
    verdict(
        1, ok,
        f"v=r ({fmt(got_sync)}) rel {err_sync:.1e}; "
        f"v-r=1 ({fmt(got_skew)}) vs (6, 1.6, 2) rel {err_skew:.1e}",
    )


def test_criterion_02_free_dynamics(verdict):
    sigma = 0.7
    p = ModelParams(N=5, r=1.0, v=1.0, sigma=sigma, alpha=0.0, beta=0.0)
    t = np.array([1.0, 10.0, 100.0])
    R, D, d = moments_closed_form(p, ZERO, t)
    err = max(max_rel(R, sigma**2 * t), max_rel(D, 2 * sigma**2 * t), float(np.max(np.abs(d))))
    verdict(2, err <= 1e-12, f"max rel err {err:.1e}")


def test_criterion_03_simulation_matches_closed_form(ensemble, verdict):
    _, _, rows = ensemble
    closed = np.array(moments_closed_form(WIDE, ZERO, SIM_TIMES)).T
    worst = 0.0
    for row, ref in zip(rows, closed):
        for j, q in enumerate(("R", "D", "d")):
            z = (float(row[f"{q}_mean"]) - ref[j]) / float(row[f"{q}_se"])
            worst = max(worst, abs(z))
    verdict(3, worst <= 3.0, f"max |z| = {worst:.2f} over R, D, d at t = {SIM_TIMES}")


def test_criterion_04_ode_matches_closed_form(verdict):
    t = np.linspace(0.0, 50.0, 200)
    errs = []
    for p in (WIDE, SMALL_SKEWED):
        errs.append(max_rel(ode_moments(p, ZERO, t), moments_closed_form(p, ZERO, t)))
    verdict(4, max(errs) <= 1e-8, f"max rel dev {max(errs):.1e}")


def test_criterion_05_count_conditioning_average(verdict):
    t_grid = np.linspace(1.0, 50.0, 50)
    init = ConditionalState.from_moments(ZERO)
    errs = []
    for p in (WIDE, SMALL_SKEWED):
        got = np.array([poisson_average_given_count(init, p, t, tail=1e-14) for t in t_grid]).T
        errs.append(max_rel(got, moments_closed_form(p, ZERO, t_grid)))
    verdict(5, max(errs) <= 1e-8, f"max rel dev {max(errs):.1e} on 50 times in [1, 50]")


def test_criterion_06_jump_enumeration(verdict):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for N in (2, 3, 5, 10):
        for _ in range(100):
            p = ModelParams(N=N, alpha=rng.uniform(0.1, 5), beta=rng.uniform(0.1, 5))
            s = derived_scalars(p)
            x = rng.normal(size=N + 1)
            R, D, d = moments_of_config(x)
            want = [*(s.K @ np.array([R, D])), s.k * d]
            worst = max(worst, max_rel(expected_post_jump_moments(x, p), want))
    verdict(6, worst <= 1e-12, f"max rel err {worst:.1e} over 400 configurations")


def poisson_series(A, delta, t):
    """Truncated-series brute force of the three Poisson power expectations."""
    mu = delta * t
    n_max = int(mu + 12 * math.sqrt(mu)) + 40
    A = np.atleast_2d(np.asarray(A, dtype=float))
    out = [np.zeros_like(A) for _ in range(3)]
    P = np.eye(A.shape[0])
    w = math.exp(-mu)
    for n in range(n_max):
        P1 = P @ A
        P2 = P1 @ A
        out[0] += w * P
        out[1] += w * t * P1 / (n + 1)
        out[2] += w * t * t * P2 / ((n + 1) * (n + 2))
        P = P1
        w *= mu / (n + 1)
    return out


def test_criterion_07_series_oracles(verdict):
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    for _ in range(50):
        a1, a2 = rng.uniform(0.05, 0.95, 2)
        delta, t = rng.uniform(0.5, 10), rng.uniform(0.1, 5)
        worst = max(worst, max_rel(u_functions(a1, a2, delta, t), u_series(a1, a2, delta, t)))
        for A in (a1, np.array([[a1, 0.0], [rng.uniform(-1, 1), a2]])):
            got = [np.atleast_2d(g) for g in poisson_power_expectation(A, delta, t)]
            for g, ref in zip(got, poisson_series(A, delta, t)):
                worst = max(worst, float(np.max(np.abs(g - ref))) / float(np.max(np.abs(ref))))
    jump = 0.0
    for a in np.linspace(0.1, 0.9, 9):
        below = u_functions(a, a + 0.999e-9, 4.0, 1.5)
        above = u_functions(a, a + 1.001e-9, 4.0, 1.5)
        jump = max(jump, max_rel(below, above))
    ok = worst <= 1e-10 and jump <= 1e-9
    verdict(7, ok, f"series max rel err {worst:.1e}; jump across threshold {jump:.1e}")


PHASE_PARAMS = ModelParams(N=2, r=1.0, v=1.1, sigma=0.5, alpha=2.0, beta=1.0)
PHASE_GRID = [2**k for k in range(10, 17)]


def test_criterion_08_phase_slopes(verdict):
    parts = []
    ok = True
    for gamma in (0.25, 0.75, 1.5):
        slope = exponent_fit(PHASE_PARAMS, gamma, PHASE_GRID, s=1.0).slope
        good = abs(slope - phi(gamma)) <= 0.05
        ok &= good
        parts.append(f"gamma={gamma} slope {slope:.3f} vs {phi(gamma):.2f}{'' if good else ' (off)'}")
    p, s, N = PHASE_PARAMS, 1.0, 2**16
    C_D = 2 * p.sigma**2 * s + p.alpha * p.skew**2 * s**3 / 3
    D = scale_curve(p, 0.5, [s], N)[1].D[0]
    ratio = D / (C_D * math.sqrt(N))
    ok &= abs(ratio - 1) <= 0.05
    parts.append(f"gamma=0.5 D/(C_D N^0.5) = {ratio:.4f}")
    verdict(8, ok, "; ".join(parts))


def test_criterion_09_h_limits(verdict):
    alpha, beta = 2.0, 1.0
    small = h_functions(1e-4, alpha, beta)[0]
    large = h_functions(1e3, alpha, beta)[0] * 1e6
    err = abs(large * alpha**2 - 1)
    ok = 0.4999 <= small <= 0.5001 and err <= 1e-4
    verdict(9, ok, f"h_R(1e-4) = {small:.7f}; h_R(1e3) 1e6 alpha^2 rel err {err:.1e}")


def test_criterion_10_displacement_scales(verdict):
    p, s, N = PHASE_PARAMS, 1.0, 2**16
    b, a = p.skew, p.alpha
    cases = [
        (0.25, lambda t: b * t),
        (0.5, lambda t: b * t),
        (1.0, lambda t: (1 - math.exp(-a * s)) * b * N / a),
        (1.5, lambda t: b * N / a),
        (2.0, lambda t: b * N / a),
    ]
    parts, ok = [], True
    for gamma, law in cases:
        t = s * N**gamma
        d = float(d_closed_form(p.with_N(N), 0.0, t))
        err = abs(d / law(t) - 1)
        ok &= err <= 0.01
        parts.append(f"gamma={gamma} {err:.1e}")
    verdict(10, ok, "rel err " + ", ".join(parts))


def test_criterion_11_rao_blackwell(ensemble, verdict):
    _, _, rows = ensemble
    direct = next(r for r in rows if float(r["t"]) == 50.0)
    cfg = SimConfig(WIDE, t_end=50.0, obs_grid=[50.0], replicas=REPLICAS, master_seed=SEED)
    rb = rao_blackwell_ensemble(None, cfg, threads=1)
    closed = np.ravel(moments_closed_form(WIDE, ZERO, [50.0]))
    z_direct, z_closed = [], []
    for j, q in enumerate(("R", "D", "d")):
        m, se = rb.mean[0, j], rb.se[0, j]
        dm, dse = float(direct[f"{q}_mean"]), float(direct[f"{q}_se"])
        z_direct.append(abs(m - dm) / math.hypot(se, dse))
        z_closed.append(abs(m - closed[j]) / se)
    se_rb, se_direct = rb.se[0, 0], float(direct["R_se"])
    ok = max(z_direct) <= 3 and max(z_closed) <= 3 and se_rb < se_direct
    verdict(
        11, ok,
        f"max |z| vs direct {max(z_direct):.2f}, vs closed form {max(z_closed):.2f}; "
        f"SE(R) {se_rb:.3e} < {se_direct:.3e}",
    )


def test_criterion_12_thread_determinism(ensemble, tmp_path, verdict):
    config, raw, _ = ensemble
    same = [simulate_csv(config, tmp_path / f"t{n}.csv", threads=n) == raw for n in (4, 8)]
    verdict(12, all(same), f"byte-identical at 1/4/8 threads: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
