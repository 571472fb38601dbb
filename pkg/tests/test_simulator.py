import numpy as np
import pytest

from clocksync import (
    Deterministic,
    Exponential,
    Gamma,
    InitialCondition,
    InvalidInputError,
    ModelParams,
    MomentVector,
    SimConfig,
    Uniform,
    free_step,
    moments_closed_form,
    run_ensemble,
    run_replica,
)
from clocksync.errors import DegenerateRatesError
from clocksync.simulator import replica_rng, sample_gaps

SEED = 20130228


def test_free_step_deterministic_drift(rng):
    p = ModelParams(N=2, r=1, v=2, sigma=0)
    np.testing.assert_array_equal(free_step([0, 0, 0], 1.0, p, rng), [1, 2, 2])


def test_free_step_zero_duration(rng):
    x = np.array([0.5, 1.0, -2.0])
    np.testing.assert_array_equal(free_step(x, 0.0, ModelParams(N=2), rng), x)


def test_free_step_increment_variance(rng):
    p = ModelParams(N=1, r=0, v=0, sigma=1, beta=0)
    samples = np.array([free_step([0.0, 0.0], 1.0, p, rng)[1] for _ in range(100_000)])
    assert samples.var() == pytest.approx(1.0, rel=0.03)


def test_free_step_negative(rng):
    with pytest.raises(InvalidInputError):
        free_step([0, 0], -0.1, ModelParams(N=1, beta=0), rng)


# -- configuration ------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(t_end=1.0, obs_grid=[0.5, 0.5]),
        dict(t_end=1.0, obs_grid=[0.5, 2.0]),
        dict(t_end=1.0, obs_grid=[-0.1]),
        dict(t_end=1.0, obs_grid=[]),
        dict(t_end=1.0, obs_grid=[1.0], replicas=0),
        dict(t_end=1.0, obs_grid=[1.0], master_seed=-1),
        dict(t_end=1.0, obs_grid=[1.0], initial=InitialCondition.vector([0, 1, 2, 3])),
    ],
)
def test_invalid_sim_config(kwargs):
    with pytest.raises(InvalidInputError):
        SimConfig(ModelParams(N=2), **kwargs)


@pytest.mark.parametrize("law", [lambda: Exponential(0), lambda: Deterministic(-1), lambda: Uniform(2, 1), lambda: Gamma(0, 1)])
def test_invalid_laws(law):
    with pytest.raises(InvalidInputError):
        law()


def test_law_without_messages_rejected():
    cfg = SimConfig(ModelParams(N=2, alpha=0, beta=0), 1.0, [1.0], law=Deterministic(0.1))
    with pytest.raises(DegenerateRatesError):
        run_replica(cfg, 0)


def test_exponential_gaps_have_mean_one_over_rate(small_net, rng):
    gaps = sample_gaps(Exponential(), small_net, 100_000, rng)
    assert gaps.mean() == pytest.approx(1 / 5, rel=0.01)
    assert np.all(gaps > 0)


def test_streams_are_distinct():
    a = replica_rng(SEED, 0).random(4)
    b = replica_rng(SEED, 1).random(4)
    c = replica_rng(SEED, 0, stream=1).random(4)
    d = replica_rng(SEED + 1, 0).random(4)
    assert len({tuple(v) for v in (a, b, c, d)}) == 4
    np.testing.assert_array_equal(a, replica_rng(SEED, 0).random(4))


# -- single replicas -----------------------------------------------------------------


def test_pure_drift_replica():
    p = ModelParams(N=3, r=1, v=1.5, sigma=0, alpha=0, beta=0)
    t = np.array([0.0, 1.0, 4.0, 10.0])
    tr = run_replica(SimConfig(p, 10.0, t), 0)
    np.testing.assert_allclose(tr.moments[:, 0], 0.25 * t**2, rtol=1e-13)
    np.testing.assert_array_equal(tr.moments[:, 1], 0.0)
    np.testing.assert_allclose(tr.moments[:, 2], 0.5 * t, rtol=1e-13)
    assert tr.events == 0


def test_replica_is_reproducible(small_net):
    cfg = SimConfig(small_net, 20.0, [5.0, 20.0], master_seed=SEED)
    a, b = run_replica(cfg, 7), run_replica(cfg, 7)
    np.testing.assert_array_equal(a.moments, b.moments)
    assert a.events == b.events
    assert not np.array_equal(a.moments, run_replica(cfg, 8).moments)


def test_event_count_is_poisson(small_net_no_skew):
    cfg = SimConfig(small_net_no_skew, 20.0, [20.0], master_seed=SEED)
    counts = np.array([run_replica(cfg, i).events for i in range(4000)])
    assert np.all(np.isfinite([run_replica(cfg, 0).moments]))
    mu = 5.0 * 20.0
    se_mean = np.sqrt(mu / counts.size)
    # variance of the sample variance of a Poisson(mu) count: (mu + 2 mu^2 (n/(n-1))) / n
    se_var = np.sqrt((mu + 2 * mu**2) / counts.size)
    assert abs(counts.mean() - mu) <= 3 * se_mean
    assert abs(counts.var(ddof=1) - mu) <= 3 * se_var


def test_server_reading_never_changes_course():
    # sensors start on the server clock and run at its rate with no noise: offsets stay 0
    # up to the rounding of piecewise drift sums
    p = ModelParams(N=4, r=1.7, v=1.7, sigma=0, alpha=3, beta=2)
    cfg = SimConfig(p, 30.0, [1.0, 10.0, 30.0], master_seed=SEED, initial=InitialCondition.vector([2.0] * 5))
    tr = run_replica(cfg, 0)
    assert tr.events > 0
    np.testing.assert_allclose(tr.moments, 0.0, atol=1e-12)


def test_deterministic_law_event_count(small_net):
    cfg = SimConfig(small_net, 10.0, [10.0], law=Deterministic(0.25))
    assert run_replica(cfg, 0).events == 40


# -- ensembles --------------------------------------------------------------------------


def test_displacement_settles_at_skew_over_rate():
    p = ModelParams(N=4, r=1, v=1.5, sigma=0, alpha=2, beta=0)
    cfg = SimConfig(p, 40.0, [40.0], replicas=4000, master_seed=SEED)
    out = run_ensemble(cfg)
    assert abs(out.d_mean[0] - 0.5 * 4 / 2) <= 3 * out.d_se[0]


def test_free_dynamics_ensemble():
    p = ModelParams(N=5, r=1, v=1, sigma=0.6, alpha=0, beta=0)
    cfg = SimConfig(p, 3.0, [1.0, 3.0], replicas=4000, master_seed=SEED)
    out = run_ensemble(cfg)
    t = cfg.obs_grid
    assert np.all(np.abs(out.R_mean - 0.36 * t) <= 3 * out.R_se)
    assert np.all(np.abs(out.D_mean - 0.72 * t) <= 3 * out.D_se)


def test_standard_error_scaling(small_net):
    big = run_ensemble(SimConfig(small_net, 5.0, [5.0], replicas=10_000, master_seed=SEED))
    small = run_ensemble(SimConfig(small_net, 5.0, [5.0], replicas=2_500, master_seed=SEED + 1))
    ratio = big.se / small.se
    assert np.all(np.abs(ratio - 0.5) <= 0.1)


def test_single_replica_has_no_standard_error(small_net):
    out = run_ensemble(SimConfig(small_net, 1.0, [1.0], replicas=1))
    assert np.all(np.isnan(out.se))
    assert out.replicas == 1


def test_ensemble_matches_closed_form(small_net):
    cfg = SimConfig(small_net, 30.0, [0.5, 3.0, 30.0], replicas=8000, master_seed=SEED)
    out = run_ensemble(cfg)
    closed = np.array(moments_closed_form(small_net, MomentVector(0, 0, 0), cfg.obs_grid)).T
    assert np.all(np.abs(out.mean - closed) <= 3 * out.se)


def test_gaussian_initial_condition_matches_expected_moments():
    p = ModelParams(N=8, r=1, v=1.05, sigma=0.3, alpha=1.2, beta=0.6)
    init = InitialCondition.gaussian(0.4, 0.25)
    cfg = SimConfig(p, 4.0, [0.0, 4.0], replicas=6000, master_seed=SEED, initial=init)
    out = run_ensemble(cfg)
    closed = np.array(moments_closed_form(p, init.expected_moments(8), cfg.obs_grid)).T
    assert np.all(np.abs(out.mean - closed) <= 3 * out.se)


def test_thread_count_does_not_change_results(wide_net):
    cfg = SimConfig(wide_net, 10.0, [2.0, 10.0], replicas=97, master_seed=SEED)
    a = run_ensemble(cfg, threads=1)
    b = run_ensemble(cfg, threads=4)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.se, b.se)
