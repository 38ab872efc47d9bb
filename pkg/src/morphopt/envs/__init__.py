"""Environment registry: ids to constructors."""

from __future__ import annotations

from .benchmarks import BenchmarkEnv, benchmark_fitness
from .hopper import PlanarHopper
from .springmass import SpringMass1D

__all__ = [
    "BenchmarkEnv",
    "PlanarHopper",
    "SpringMass1D",
    "benchmark_fitness",
    "ENV_IDS",
    "make_env",
    "env_class",
]

ENV_IDS = ("sphere", "rastrigin", "springmass", "planar_hopper")


def env_class(env_id: str):
    """Dataclass behind an environment id (benchmarks share one class)."""
    if env_id in ("sphere", "rastrigin"):
        return BenchmarkEnv
    if env_id == "springmass":
        return SpringMass1D
    if env_id == "planar_hopper":
        return PlanarHopper
    raise ValueError(f"unknown environment id {env_id!r}; known: {', '.join(ENV_IDS)}")


def make_env(env_id: str, **overrides):
    """Construct an environment from its id plus field overrides."""
    cls = env_class(env_id)
    if cls is BenchmarkEnv:
        overrides.setdefault("dim", 10)
        return BenchmarkEnv(kind=env_id, **overrides)
    return cls(**overrides)
