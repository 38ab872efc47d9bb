"""Joint parameter vector plumbing: split, morphology decoding, reward shaping.

One flat vector w carries both the policy weights (prefix) and the raw
morphology parameters (suffix).  Raw morphology values live in the same
unbounded Gaussian search space as the weights and are mapped to physical
design values by clamp + affine scale, so every sampled vector decodes to
an admissible body within +/- scale_limit of the original design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np


@dataclass(frozen=True)
class ParamPartition:
    """Lengths of the policy and morphology segments of the joint vector."""

    policy_len: int
    morph_len: int

    def __post_init__(self) -> None:
        if self.policy_len < 0 or self.morph_len < 0:
            raise ValueError("segment lengths must be >= 0")

    @property
    def total_dim(self) -> int:
        return self.policy_len + self.morph_len


def split(w: np.ndarray, part: ParamPartition) -> tuple[np.ndarray, np.ndarray]:
    """Exact prefix/suffix split of the joint vector.

    Returns views; concatenating them reproduces w bitwise.  morph_len = 0
    yields an empty morphology segment (fixed-morphology baseline mode).
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != part.total_dim:
        raise ValueError(
            f"joint vector length {w.shape} does not match partition "
            f"{part.policy_len}+{part.morph_len}"
        )
    return w[: part.policy_len], w[part.policy_len :]


@dataclass(frozen=True, eq=False)
class MorphologySpec:
    """Original physical design values and the raw -> physical mapping."""

    names: tuple[str, ...]
    original: np.ndarray
    scale_limit: float = 0.75

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MorphologySpec):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.original, other.original)
            and self.scale_limit == other.scale_limit
        )

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(
            self, "original", np.asarray(self.original, dtype=np.float64)
        )
        if len(self.names) != self.original.shape[0]:
            raise ValueError("one name per original value required")
        if np.any(self.original <= 0.0):
            raise ValueError("original design values must be > 0")
        if not 0.0 < self.scale_limit < 1.0:
            raise ValueError("scale_limit must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return self.original.shape[0]


def decode_morphology(raw: np.ndarray, spec: MorphologySpec) -> np.ndarray:
    """Map raw search-space values to physical design values.

    physical_j = original_j * (1 + scale_limit * clamp(raw_j, -1, 1)),
    so each physical value stays within [1-scale_limit, 1+scale_limit]
    times the original and keeps its sign.  Clamping makes every raw
    vector admissible.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (spec.dim,):
        raise ValueError(f"raw morphology length {raw.shape} != spec dim {spec.dim}")
    return spec.original * (1.0 + spec.scale_limit * np.clip(raw, -1.0, 1.0))


@dataclass(frozen=True)
class AugmentationSpec:
    """Multiplicative fitness scaling that rewards smaller leg designs."""

    enabled: bool = False
    orig_area: float = 1.0
    area_of: Callable[[np.ndarray], float] | None = None

    @staticmethod
    def for_env(env, morph_spec: MorphologySpec, enabled: bool = True) -> "AugmentationSpec":
        """Build from an environment's leg-area function and the original design."""
        orig_area = env.leg_area(morph_spec.original)
        if orig_area <= 0.0:
            raise ValueError("original leg area must be > 0")
        return AugmentationSpec(enabled=enabled, orig_area=orig_area, area_of=env.leg_area)


def augment_reward(task_score: float, physical: np.ndarray, aug: AugmentationSpec) -> float:
    """Scale a task score by the utility factor 1 + ln(orig_area / new_area).

    Disabled specs pass the score through.  The factor is 1 at equal areas,
    2 when the new area is orig/e, and goes <= 0 once the design grows past
    e times the original area -- growth is penalized, not clamped.
    """
    if not aug.enabled:
        return task_score
    if aug.area_of is None:
        raise ValueError("augmentation enabled but no area function bound")
    area = aug.area_of(np.asarray(physical, dtype=np.float64))
    if area <= 0.0:
        raise ValueError(f"leg area must be > 0, got {area}")
    return task_score * (1.0 + math.log(aug.orig_area / area))


@runtime_checkable
class EnvironmentBinding(Protocol):
    """Rollout contract every environment implements.

    A rollout is a pure function of (physical morphology, policy, episode
    seed): the same triple gives a bitwise-identical episode, so any number
    of rollouts can run concurrently with no coordination.

    ``rollout`` drives an arbitrary policy callable (obs -> action) step by
    step and exists for probing and tests.  ``rollout_params`` is the fused
    fast path the trainer uses: it interprets the raw policy segment itself
    (MLP weights, or nothing for environments with a built-in controller)
    and keeps the whole episode inside one compiled kernel.  The two paths
    share the same step math but may differ in final-ulp float details, so
    a single run must never mix them.
    """

    obs_dim: int
    act_dim: int

    def morph_dim(self) -> int:
        """Number of physical morphology values rollouts expect."""
        ...

    def default_morph_spec(self) -> MorphologySpec:
        """The original design and bounds this environment ships with."""
        ...

    def policy_param_count(self) -> int:
        """Length of the raw policy segment rollout_params consumes."""
        ...

    def leg_area(self, physical: np.ndarray) -> float:
        """Total leg area of a design, for reward augmentation."""
        ...

    def rollout(self, physical: np.ndarray, policy, seed: int) -> tuple[float, int]:
        """Run one episode with a policy callable; (task_score, steps)."""
        ...

    def rollout_params(
        self, physical: np.ndarray, policy_params: np.ndarray, seed: int
    ) -> tuple[float, int]:
        """Run one episode from the raw policy segment; (task_score, steps)."""
        ...
