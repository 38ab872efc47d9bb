"""Analytic benchmark fitnesses for optimizer verification.

These are not physical environments: the candidate vector itself is the
point being scored, there is no morphology segment, and the score is
seed-independent.  They exist so the optimizer loop can be checked against
functions with known optima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env_core import MorphologySpec

KINDS = ("sphere", "rastrigin")


@dataclass(frozen=True)
class BenchmarkEnv:
    """Sphere or Rastrigin fitness over the raw candidate vector."""

    kind: str
    dim: int
    obs_dim: int = 0
    act_dim: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown benchmark kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def morph_dim(self) -> int:
        return 0

    def default_morph_spec(self) -> MorphologySpec:
        raise ValueError("benchmark environments have no morphology")

    def policy_param_count(self) -> int:
        return self.dim

    def leg_area(self, physical: np.ndarray) -> float:
        raise ValueError("benchmark environments have no leg area")

    def rollout(self, physical, policy, seed: int) -> tuple[float, int]:
        raise ValueError(
            "benchmark environments score parameter vectors directly; "
            "use rollout_params"
        )

    def rollout_params(
        self, physical: np.ndarray, policy_params: np.ndarray, seed: int
    ) -> tuple[float, int]:
        return benchmark_fitness(self, policy_params), 1


def benchmark_fitness(env: BenchmarkEnv, w: np.ndarray) -> float:
    """Fitness (higher is better) of a point; optimum 0 at the origin."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (env.dim,):
        raise ValueError(f"point length {w.shape} != benchmark dim {env.dim}")
    if env.kind == "sphere":
        return float(-np.sum(w**2))
    return float(-(10.0 * env.dim + np.sum(w**2 - 10.0 * np.cos(2.0 * np.pi * w))))
