"""Outer training loop: evaluate populations, track the best agent, repeat runs.

Each generation samples a population from the search distribution, scores
every candidate as the mean of K seeded rollouts (augmented when reward
augmentation is on), feeds the fitnesses to the optimizer, and periodically
re-scores the generation's best candidate on a fixed held-out seed set to
maintain the best-ever agent by unaugmented task score.

Every seed is derived from (master_seed, generation, candidate, rollout)
through the fixed mixing function, so results are bitwise identical for any
worker count and checkpoint resume replays the exact remaining schedule.
Candidate evaluations are embarrassingly parallel; the optimizer update is
a serial barrier per generation.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .env_core import (
    AugmentationSpec,
    MorphologySpec,
    ParamPartition,
    augment_reward,
    decode_morphology,
    split,
)
from .es_optimizer import (
    OptimizerConfig,
    SearchDistribution,
    estimate_gradient,
    init_distribution,
    sample_population,
    update,
)
from .seeding import STREAM_EVAL, STREAM_INIT, STREAM_SAMPLE, mix_seed


@dataclass
class TrainConfig:
    """Run-level knobs; optimizer knobs live in OptimizerConfig."""

    generations: int
    population_size: int = 192
    rollouts_per_candidate: int = 16
    master_seed: int = 0
    eval_every: int = 10
    eval_rollouts: int = 100
    checkpoint_every: int = 50

    def __post_init__(self) -> None:
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("population_size", "rollouts_per_candidate", "eval_every",
                     "eval_rollouts", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True, eq=False)
class HistoryRow:
    generation: int
    mean_fitness: float
    best_fitness: float
    sigma_mean: float
    best_avg_score: float            # nan until the first best evaluation

    def __eq__(self, other: object) -> bool:
        # bitwise field equality, with nan == nan (round-tripped rows must
        # compare equal before the first best evaluation)
        if not isinstance(other, HistoryRow):
            return NotImplemented

        def same(a: float, b: float) -> bool:
            return a == b or (np.isnan(a) and np.isnan(b))

        return (
            self.generation == other.generation
            and same(self.mean_fitness, other.mean_fitness)
            and same(self.best_fitness, other.best_fitness)
            and same(self.sigma_mean, other.sigma_mean)
            and same(self.best_avg_score, other.best_avg_score)
        )

    def __hash__(self) -> int:
        return hash((self.generation, self.mean_fitness, self.best_fitness,
                     self.sigma_mean, self.best_avg_score))


@dataclass
class TrainState:
    generation: int                  # completed generations
    dist: SearchDistribution
    best_params: np.ndarray | None = None
    best_avg_score: float = float("nan")
    history: list[HistoryRow] = field(default_factory=list)


class Evaluator:
    """Maps a joint parameter vector to a fitness for one environment.

    With an empty morphology segment the joint vector is the policy segment
    and rollouts run on the environment's own original design; neither
    decoding nor augmentation is ever invoked, so baseline runs take the
    exact same float path as a build without the morphology machinery.
    """

    def __init__(
        self,
        env,
        part: ParamPartition,
        morph_spec: MorphologySpec | None,
        aug: AugmentationSpec | None,
    ):
        if part.policy_len != env.policy_param_count():
            raise ValueError(
                f"partition policy_len {part.policy_len} does not match the "
                f"environment's {env.policy_param_count()} policy parameters"
            )
        if part.morph_len > 0:
            if morph_spec is None:
                raise ValueError("morphology segment declared but no MorphologySpec given")
            if morph_spec.dim != part.morph_len or morph_spec.dim != env.morph_dim():
                raise ValueError(
                    f"morphology dims disagree: partition {part.morph_len}, "
                    f"spec {morph_spec.dim}, env {env.morph_dim()}"
                )
        elif aug is not None and aug.enabled:
            raise ValueError("reward augmentation needs a morphology segment")
        self.env = env
        self.part = part
        self.morph_spec = morph_spec
        self.aug = aug if aug is not None else AugmentationSpec(enabled=False)
        self.fixed_morph = (
            env.default_morph_spec().original if part.morph_len == 0 and env.morph_dim() > 0
            else None
        )

    def physical_morphology(self, w: np.ndarray) -> np.ndarray | None:
        """Decoded design for a joint vector; the fixed design in baseline mode."""
        if self.part.morph_len == 0:
            return self.fixed_morph
        _, morph_raw = split(w, self.part)
        return decode_morphology(morph_raw, self.morph_spec)

    def fitness(self, w: np.ndarray, rollout_seeds) -> float:
        """Mean augmented score of one candidate over the given seeds."""
        if self.part.morph_len == 0:
            policy_raw = np.asarray(w, dtype=np.float64)
            if policy_raw.shape[0] != self.part.policy_len:
                raise ValueError("joint vector length does not match partition")
            scores = [
                self.env.rollout_params(self.fixed_morph, policy_raw, seed)[0]
                for seed in rollout_seeds
            ]
        else:
            policy_raw, morph_raw = split(w, self.part)
            physical = decode_morphology(morph_raw, self.morph_spec)
            scores = [
                augment_reward(
                    self.env.rollout_params(physical, policy_raw, seed)[0], physical, self.aug
                )
                for seed in rollout_seeds
            ]
        return _mean(scores)

    def task_score(self, w: np.ndarray, rollout_seeds) -> float:
        """Mean unaugmented task score; used for all reporting."""
        physical = self.physical_morphology(w)
        if self.part.morph_len == 0:
            policy_raw = np.asarray(w, dtype=np.float64)
        else:
            policy_raw, _ = split(w, self.part)
        scores = [
            self.env.rollout_params(physical, policy_raw, seed)[0] for seed in rollout_seeds
        ]
        return _mean(scores)


def _mean(scores: list[float]) -> float:
    """Left-to-right mean; identical values return exactly that value."""
    first = scores[0]
    if all(s == first for s in scores):
        return float(first)
    return float(sum(scores) / len(scores))


def evaluate_candidate(
    w: np.ndarray,
    env,
    part: ParamPartition,
    rollout_seeds,
    morph_spec: MorphologySpec | None = None,
    aug: AugmentationSpec | None = None,
) -> float:
    """Fitness of one joint vector: mean augmented score over the seeds."""
    return Evaluator(env, part, morph_spec, aug).fitness(w, rollout_seeds)


_WORKER_EVALUATOR: Evaluator | None = None


def _init_worker(env, part, morph_spec, aug) -> None:
    global _WORKER_EVALUATOR
    _WORKER_EVALUATOR = Evaluator(env, part, morph_spec, aug)


def _worker_fitness(task) -> float:
    w, seeds = task
    return _WORKER_EVALUATOR.fitness(w, seeds)


def rollout_seeds_for(base_seed: int, k: int) -> list[int]:
    """The k per-rollout seeds derived from a candidate's base seed.

    The base seed is Population.seeds[i], itself mixed from (master_seed,
    sample stream, generation, candidate index), so every rollout seed is a
    pure function of those indices.
    """
    return [mix_seed(base_seed, j) for j in range(k)]


def eval_seeds_for(master_seed: int, n: int) -> list[int]:
    """The fixed held-out seed set used for best-agent scoring."""
    return [mix_seed(master_seed, STREAM_EVAL, j) for j in range(n)]


def train(
    cfg: TrainConfig,
    env,
    part: ParamPartition,
    opt_cfg: OptimizerConfig,
    *,
    morph_spec: MorphologySpec | None = None,
    aug: AugmentationSpec | None = None,
    workers: int = 1,
    start_state: TrainState | None = None,
    on_generation: Callable[[HistoryRow], None] | None = None,
    checkpoint_sink: Callable[[TrainState], None] | None = None,
) -> TrainState:
    """Run the sample -> evaluate -> estimate -> update loop.

    Resuming from ``start_state`` replays exactly the schedule an
    uninterrupted run would have followed.  ``checkpoint_sink`` is called
    every cfg.checkpoint_every generations and once more if the
    distribution state ever goes non-finite (diagnostic checkpoint), before
    the error propagates.
    """
    if cfg.population_size != opt_cfg.population_size:
        raise ValueError(
            f"train population_size {cfg.population_size} disagrees with "
            f"optimizer population_size {opt_cfg.population_size}"
        )
    evaluator = Evaluator(env, part, morph_spec, aug)
    dim = part.total_dim
    if start_state is None:
        state = TrainState(
            generation=0,
            dist=init_distribution(dim, opt_cfg, mix_seed(cfg.master_seed, STREAM_INIT)),
        )
    else:
        state = start_state
        if state.dist.dim != dim:
            raise ValueError("resumed distribution dim does not match partition")

    eval_seeds = eval_seeds_for(cfg.master_seed, cfg.eval_rollouts)
    pool = None
    try:
        if workers > 1:
            pool = multiprocessing.get_context("fork").Pool(
                workers, initializer=_init_worker, initargs=(env, part, morph_spec, aug)
            )
        for gen in range(state.generation, cfg.generations):
            sample_seed = mix_seed(cfg.master_seed, STREAM_SAMPLE, gen)
            pop = sample_population(
                state.dist, cfg.population_size, sample_seed,
                antithetic=opt_cfg.antithetic,
            )
            tasks = [
                (pop.candidates[i], rollout_seeds_for(pop.seeds[i], cfg.rollouts_per_candidate))
                for i in range(pop.size)
            ]
            if pool is None:
                fitnesses = [evaluator.fitness(w, seeds) for w, seeds in tasks]
            else:
                fitnesses = pool.map(_worker_fitness, tasks)
            pop.fitnesses = np.asarray(fitnesses, dtype=np.float64)

            try:
                g_mu, g_sigma = estimate_gradient(state.dist, pop, opt_cfg)
                new_dist = update(state.dist, g_mu, g_sigma, opt_cfg)
            except ValueError:
                if checkpoint_sink is not None:
                    checkpoint_sink(state)      # diagnostic snapshot
                raise

            if (gen + 1) % cfg.eval_every == 0 or gen == cfg.generations - 1:
                best_idx = int(np.argmax(pop.fitnesses))
                avg = evaluator.task_score(pop.candidates[best_idx], eval_seeds)
                if state.best_params is None or avg > state.best_avg_score:
                    state.best_params = pop.candidates[best_idx].copy()
                    state.best_avg_score = avg

            row = HistoryRow(
                generation=gen,
                mean_fitness=float(pop.fitnesses.mean()),
                best_fitness=float(pop.fitnesses.max()),
                sigma_mean=float(state.dist.sigma.mean()),
                best_avg_score=state.best_avg_score,
            )
            state.history.append(row)
            state.dist = new_dist
            state.generation = gen + 1
            if on_generation is not None:
                on_generation(row)
            if checkpoint_sink is not None and (gen + 1) % cfg.checkpoint_every == 0:
                checkpoint_sink(state)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return state


@dataclass
class RunSummary:
    """Per-run final scores of repeated independent experiments."""

    scores: list[float]
    run_indices: list[int]
    failures: list[tuple[int, str]]

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores)) if self.scores else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.scores)) if self.scores else float("nan")


def multi_run(
    cfg: TrainConfig,
    env,
    part: ParamPartition,
    opt_cfg: OptimizerConfig,
    n_runs: int,
    *,
    morph_spec: MorphologySpec | None = None,
    aug: AugmentationSpec | None = None,
    workers: int = 1,
    on_run: Callable[[int, TrainState], None] | None = None,
) -> RunSummary:
    """Repeat the experiment n_runs times; run r uses master_seed + r.

    A run that raises is recorded as a failure and excluded from the
    mean/std; its error message is kept in the summary.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    summary = RunSummary(scores=[], run_indices=[], failures=[])
    for r in range(n_runs):
        run_cfg = replace(cfg, master_seed=cfg.master_seed + r)
        try:
            state = train(
                run_cfg, env, part, opt_cfg,
                morph_spec=morph_spec, aug=aug, workers=workers,
            )
        except Exception as exc:  # noqa: BLE001 - run isolation is the point
            summary.failures.append((r, f"{type(exc).__name__}: {exc}"))
            continue
        summary.scores.append(state.best_avg_score)
        summary.run_indices.append(r)
        if on_run is not None:
            on_run(r, state)
    return summary
