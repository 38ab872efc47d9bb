"""Population-based REINFORCE over a factored Gaussian search distribution.

Each generation: sample N candidate vectors w^i with w_j ~ N(mu_j, sigma_j),
evaluate their fitnesses R(w^i), estimate the fitness gradient with respect
to (mu, sigma) from the closed-form per-sample log-likelihood gradients

    d/dmu_j    log N(w, theta) = (w_j - mu_j) / sigma_j^2
    d/dsigma_j log N(w, theta) = ((w_j - mu_j)^2 - sigma_j^2) / sigma_j^3

and ascend both parameter vectors.  Candidate evaluation is the caller's
job (see trainer); everything here is pure numpy on small vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import mix_seed


@dataclass
class SearchDistribution:
    """Per-dimension mean and standard deviation of the search Gaussian."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise ValueError("mu and sigma must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma))):
            raise ValueError("distribution parameters must be finite")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass
class Population:
    """One generation of sampled candidates and their (eventual) fitnesses."""

    candidates: np.ndarray          # (n, dim)
    seeds: np.ndarray               # (n,) uint64 base rollout seeds
    fitnesses: np.ndarray | None = None   # (n,) filled in by evaluation

    @property
    def size(self) -> int:
        return self.candidates.shape[0]


@dataclass
class OptimizerConfig:
    """Knobs for the sampler and the gradient step.

    The defaults are the plain configuration: mean-fitness baseline on,
    rank shaping and antithetic mirroring off.  sigma_floor keeps the
    per-dimension std away from zero so the log-likelihood gradients never
    divide by zero.
    """

    population_size: int = 192
    lr_mu: float = 0.05
    lr_sigma: float = 0.01
    sigma_init: float = 0.1
    sigma_floor: float = 0.01
    use_baseline: bool = True
    rank_shaping: bool = False
    antithetic: bool = False
    mu_init: str = "zeros"          # "zeros" | "uniform" (U[-1,1] per dim)

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.antithetic and self.population_size % 2 != 0:
            raise ValueError("population_size must be even with antithetic sampling")
        if self.lr_mu <= 0 or self.lr_sigma <= 0:
            raise ValueError("learning rates must be > 0")
        if self.sigma_floor <= 0 or self.sigma_init < self.sigma_floor:
            raise ValueError("need sigma_init >= sigma_floor > 0")
        if self.mu_init not in ("zeros", "uniform"):
            raise ValueError(f"unknown mu_init {self.mu_init!r}")


def init_distribution(dim: int, cfg: OptimizerConfig, rng_seed: int) -> SearchDistribution:
    """Fresh search distribution: sigma_init everywhere, mu per cfg.mu_init."""
    if cfg.mu_init == "uniform":
        rng = np.random.default_rng(np.uint64(rng_seed))
        mu = rng.uniform(-1.0, 1.0, size=dim)
    else:
        mu = np.zeros(dim)
    return SearchDistribution(mu=mu, sigma=np.full(dim, cfg.sigma_init))


def sample_population(
    dist: SearchDistribution,
    n: int,
    rng_seed: int,
    *,
    antithetic: bool = False,
) -> Population:
    """Draw n candidates, w_j ~ N(mu_j, sigma_j) independently per dimension.

    Reproducible: the same (dist, n, rng_seed) gives bitwise-identical
    candidates.  With antithetic=True the second half mirrors the first
    around mu (n must be even).
    """
    if n < 2:
        raise ValueError("population size must be >= 2")
    rng = np.random.default_rng(np.uint64(rng_seed))
    if antithetic:
        if n % 2 != 0:
            raise ValueError("antithetic sampling needs an even population")
        eps = rng.standard_normal((n // 2, dist.dim))
        eps = np.concatenate([eps, -eps], axis=0)
    else:
        eps = rng.standard_normal((n, dist.dim))
    candidates = dist.mu + dist.sigma * eps
    seeds = np.array([mix_seed(rng_seed, i) for i in range(n)], dtype=np.uint64)
    return Population(candidates=candidates, seeds=seeds)


def log_prob_grads(
    dist: SearchDistribution, candidate: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form per-dimension gradients of log N(w; mu, sigma)."""
    w = np.asarray(candidate, dtype=np.float64)
    if w.shape != dist.mu.shape:
        raise ValueError("candidate length does not match distribution dim")
    diff = w - dist.mu
    grad_mu = diff / dist.sigma**2
    grad_sigma = (diff**2 - dist.sigma**2) / dist.sigma**3
    return grad_mu, grad_sigma


def shape_fitnesses(fitnesses: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    """Fitness shaping applied before the gradient estimate.

    rank_shaping wins over use_baseline when both are set: centered ranks
    are already zero-mean, so a baseline would be a no-op anyway.
    """
    r = np.asarray(fitnesses, dtype=np.float64)
    if cfg.rank_shaping:
        order = np.argsort(r, kind="stable")
        ranks = np.empty(r.shape[0], dtype=np.float64)
        ranks[order] = np.arange(r.shape[0], dtype=np.float64)
        return ranks / (r.shape[0] - 1) - 0.5
    if cfg.use_baseline:
        return r - r.mean()
    return r


def estimate_gradient(
    dist: SearchDistribution, pop: Population, cfg: OptimizerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of (d/dmu, d/dsigma) of the expected fitness.

    g = (1/N) sum_i shaped(R_i) * grad log N(w^i; mu, sigma), evaluated
    against the distribution that generated the population.
    """
    if pop.fitnesses is None:
        raise ValueError("population has not been evaluated")
    r = np.asarray(pop.fitnesses, dtype=np.float64)
    if r.shape[0] != pop.size:
        raise ValueError("fitness count does not match population size")
    if not np.all(np.isfinite(r)):
        bad = int(np.flatnonzero(~np.isfinite(r))[0])
        raise ValueError(f"non-finite fitness for candidate {bad}")
    shaped = shape_fitnesses(r, cfg)
    diff = pop.candidates - dist.mu
    g_mu = (shaped[:, None] * diff / dist.sigma**2).mean(axis=0)
    g_sigma = (shaped[:, None] * (diff**2 - dist.sigma**2) / dist.sigma**3).mean(axis=0)
    return g_mu, g_sigma


def update(
    dist: SearchDistribution,
    g_mu: np.ndarray,
    g_sigma: np.ndarray,
    cfg: OptimizerConfig,
) -> SearchDistribution:
    """One gradient-ascent step; sigma is clamped at cfg.sigma_floor."""
    g_mu = np.asarray(g_mu, dtype=np.float64)
    g_sigma = np.asarray(g_sigma, dtype=np.float64)
    if g_mu.shape != dist.mu.shape or g_sigma.shape != dist.sigma.shape:
        raise ValueError("gradient length does not match distribution dim")
    if not (np.all(np.isfinite(g_mu)) and np.all(np.isfinite(g_sigma))):
        raise ValueError("non-finite gradient; update rejected")
    mu = dist.mu + cfg.lr_mu * g_mu
    sigma = np.maximum(cfg.sigma_floor, dist.sigma + cfg.lr_sigma * g_sigma)
    return SearchDistribution(mu=mu, sigma=sigma)
