from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphopt.es_optimizer import (
    OptimizerConfig,
    Population,
    SearchDistribution,
    estimate_gradient,
    init_distribution,
    log_prob_grads,
    sample_population,
    shape_fitnesses,
    update,
)


def make_dist(mu, sigma):
    return SearchDistribution(mu=np.asarray(mu, float), sigma=np.asarray(sigma, float))


# -- sampling ---------------------------------------------------------------


def test_sampling_is_reproducible_bitwise():
    dist = make_dist([0.5, -1.0], [0.3, 0.7])
    a = sample_population(dist, 4, rng_seed=123)
    b = sample_population(dist, 4, rng_seed=123)
    assert np.array_equal(a.candidates, b.candidates)
    assert np.array_equal(a.seeds, b.seeds)
    c = sample_population(dist, 4, rng_seed=124)
    assert not np.array_equal(a.candidates, c.candidates)


def test_tiny_sigma_collapses_to_mu():
    dist = make_dist([2.0, -3.0], [1e-300, 1e-300])
    pop = sample_population(dist, 8, rng_seed=5)
    np.testing.assert_allclose(pop.candidates, np.broadcast_to(dist.mu, (8, 2)), atol=1e-290)


def test_sample_moments_standard_normal():
    dist = make_dist([0.0], [1.0])
    pop = sample_population(dist, 10**5, rng_seed=42)
    x = pop.candidates[:, 0]
    assert abs(x.mean()) < 0.02            # ~3/sqrt(n) Monte Carlo bound
    assert abs(x.std() - 1.0) < 0.02


def test_antithetic_mirrors_and_needs_even_population():
    dist = make_dist([1.0, 2.0], [0.5, 0.5])
    pop = sample_population(dist, 6, rng_seed=9, antithetic=True)
    lo = pop.candidates[:3] - dist.mu
    hi = pop.candidates[3:] - dist.mu
    np.testing.assert_allclose(lo, -hi, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        sample_population(dist, 5, rng_seed=9, antithetic=True)


# -- closed-form log-likelihood gradients ------------------------------------


def test_log_prob_grads_at_mean():
    dist = make_dist([1.0, -2.0], [0.5, 2.0])
    g_mu, g_sigma = log_prob_grads(dist, dist.mu.copy())
    np.testing.assert_array_equal(g_mu, np.zeros(2))
    np.testing.assert_allclose(g_sigma, -1.0 / dist.sigma, rtol=0, atol=0)


def test_log_prob_grads_zero_sigma_gradient_at_one_sigma_offset():
    dist = make_dist([0.3], [0.7])
    _, g_sigma = log_prob_grads(dist, np.array([0.3 + 0.7]))
    assert g_sigma[0] == pytest.approx(0.0, abs=1e-15)


def test_log_prob_grads_worked_example():
    dist = make_dist([1.0], [2.0])
    g_mu, g_sigma = log_prob_grads(dist, np.array([3.0]))
    assert g_mu[0] == pytest.approx(0.5, abs=0)
    assert g_sigma[0] == pytest.approx(0.0, abs=0)


# -- gradient estimator -------------------------------------------------------


def test_equal_fitnesses_with_baseline_give_zero_gradient():
    dist = make_dist([0.0, 0.0], [1.0, 1.0])
    pop = sample_population(dist, 16, rng_seed=1)
    pop.fitnesses = np.full(16, 3.7)
    g_mu, g_sigma = estimate_gradient(dist, pop, OptimizerConfig(use_baseline=True))
    np.testing.assert_array_equal(g_mu, np.zeros(2))
    np.testing.assert_array_equal(g_sigma, np.zeros(2))


def test_two_candidate_expansion():
    # candidates mu +/- sigma with fitnesses +/-1, raw shaping:
    # g_mu = 1/sigma, g_sigma = 0
    mu, sigma = 0.4, 0.8
    dist = make_dist([mu], [sigma])
    pop = Population(
        candidates=np.array([[mu + sigma], [mu - sigma]]),
        seeds=np.zeros(2, dtype=np.uint64),
        fitnesses=np.array([1.0, -1.0]),
    )
    cfg = OptimizerConfig(use_baseline=False)
    g_mu, g_sigma = estimate_gradient(dist, pop, cfg)
    assert g_mu[0] == pytest.approx(1.0 / sigma, rel=1e-15)
    assert g_sigma[0] == pytest.approx(0.0, abs=1e-15)


def test_quadratic_fitness_matches_analytic_gradient():
    # R(w) = -w^2: dJ/dmu = -2 mu, raw shaping, spec's 5% MC tolerance
    dist = make_dist([1.0], [0.5])
    pop = sample_population(dist, 10**5, rng_seed=2024)
    pop.fitnesses = -(pop.candidates[:, 0] ** 2)
    g_mu, _ = estimate_gradient(dist, pop, OptimizerConfig(use_baseline=False))
    assert g_mu[0] == pytest.approx(-2.0, rel=0.05)


def test_baseline_invariance_exact_arithmetic():
    # Integer fitnesses, power-of-two shift and population size keep every
    # intermediate exactly representable, so shift invariance of the
    # baselined estimate holds bitwise (with rounding it holds to roundoff).
    dist = make_dist([0.25, -0.5], [0.5, 1.0])
    pop = sample_population(dist, 8, rng_seed=3)
    base = np.array([1.0, 5.0, -3.0, 7.0, 2.0, -6.0, 4.0, 0.0])
    cfg = OptimizerConfig(use_baseline=True)
    pop.fitnesses = base
    g1 = estimate_gradient(dist, pop, cfg)
    pop.fitnesses = base + 1024.0
    g2 = estimate_gradient(dist, pop, cfg)
    assert np.array_equal(g1[0], g2[0])
    assert np.array_equal(g1[1], g2[1])


def test_baseline_invariance_general_floats_to_roundoff():
    dist = make_dist([0.1], [0.4])
    pop = sample_population(dist, 32, rng_seed=8)
    rng = np.random.default_rng(0)
    base = rng.normal(0, 1, 32)
    cfg = OptimizerConfig(use_baseline=True)
    pop.fitnesses = base.copy()
    g1 = estimate_gradient(dist, pop, cfg)
    pop.fitnesses = base + 0.37
    g2 = estimate_gradient(dist, pop, cfg)
    np.testing.assert_allclose(g1[0], g2[0], rtol=1e-10, atol=1e-12)


def test_rank_shaping_is_centered_and_bounded():
    cfg = OptimizerConfig(rank_shaping=True)
    shaped = shape_fitnesses(np.array([5.0, -2.0, 100.0, 0.5]), cfg)
    assert shaped.min() == -0.5 and shaped.max() == 0.5
    assert shaped.sum() == pytest.approx(0.0, abs=1e-15)
    # order preserved: higher fitness, higher shaped value
    assert shaped[2] == 0.5 and shaped[1] == -0.5


def test_non_finite_fitness_is_an_error():
    dist = make_dist([0.0], [1.0])
    pop = sample_population(dist, 4, rng_seed=1)
    pop.fitnesses = np.array([1.0, np.nan, 0.0, 2.0])
    with pytest.raises(ValueError, match="non-finite fitness"):
        estimate_gradient(dist, pop, OptimizerConfig())


# -- update -------------------------------------------------------------------


def test_zero_gradient_is_fixed_point():
    dist = make_dist([0.3, -0.7], [0.2, 0.4])
    out = update(dist, np.zeros(2), np.zeros(2), OptimizerConfig())
    assert np.array_equal(out.mu, dist.mu)
    assert np.array_equal(out.sigma, dist.sigma)


def test_sigma_clamped_exactly_at_floor():
    cfg = OptimizerConfig(sigma_floor=0.01, lr_sigma=1.0)
    dist = make_dist([0.0], [0.05])
    out = update(dist, np.zeros(1), np.array([-10.0]), cfg)
    assert out.sigma[0] == 0.01


def test_mu_step_arithmetic():
    cfg = OptimizerConfig(lr_mu=0.1)
    dist = make_dist([0.0], [0.1])
    out = update(dist, np.array([1.0]), np.zeros(1), cfg)
    assert out.mu[0] == pytest.approx(0.1, abs=0)


def test_non_finite_gradient_rejected():
    dist = make_dist([0.0], [0.1])
    with pytest.raises(ValueError, match="non-finite gradient"):
        update(dist, np.array([np.inf]), np.zeros(1), OptimizerConfig())


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_sigma_never_below_floor_after_update_sequences(seed):
    rng = np.random.default_rng(seed)
    cfg = OptimizerConfig(sigma_floor=0.01, lr_sigma=0.5)
    dist = make_dist([0.0, 0.0, 0.0], [0.1, 0.1, 0.1])
    for _ in range(20):
        g_sigma = rng.normal(0, 5.0, 3)
        dist = update(dist, np.zeros(3), g_sigma, cfg)
        assert np.all(dist.sigma >= cfg.sigma_floor)


def test_init_distribution_modes():
    cfg_z = OptimizerConfig(mu_init="zeros", sigma_init=0.2)
    d = init_distribution(4, cfg_z, rng_seed=1)
    assert np.array_equal(d.mu, np.zeros(4))
    assert np.all(d.sigma == 0.2)
    cfg_u = OptimizerConfig(mu_init="uniform")
    d1 = init_distribution(4, cfg_u, rng_seed=1)
    d2 = init_distribution(4, cfg_u, rng_seed=1)
    assert np.array_equal(d1.mu, d2.mu)
    assert np.all(np.abs(d1.mu) <= 1.0)
    assert not np.array_equal(d1.mu, np.zeros(4))


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(population_size=1)
    with pytest.raises(ValueError):
        OptimizerConfig(population_size=3, antithetic=True)
    with pytest.raises(ValueError):
        OptimizerConfig(lr_mu=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(sigma_init=0.001, sigma_floor=0.01)
    with pytest.raises(ValueError):
        OptimizerConfig(mu_init="gaussian")
