#!/usr/bin/env python3
"""Regenerate the frozen test fixtures under tests/data/.

- hopper_reference_policy.txt: weights of a hopper policy trained on the
  default morphology, used by tests that need a nonzero surviving
  controller.
- baseline_trace.txt: history of a small fixed-morphology training run,
  the bitwise regression guard for plain policy search.  Bitwise float
  reproducibility is machine-specific (libm/BLAS builds); regenerate here
  when moving the suite to a new platform.
"""

from __future__ import annotations

from pathlib import Path

from morphopt.cli_io import parse_config, serialize_config
from morphopt.envs.hopper import PlanarHopper
from morphopt.es_optimizer import OptimizerConfig
from morphopt.env_core import ParamPartition
from morphopt.trainer import TrainConfig, train

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"

BASELINE_TRACE_CONFIG = """\
env.id = springmass
env.control = mlp
env.episode_steps = 300
train.generations = 12
train.population_size = 16
train.rollouts_per_candidate = 2
train.master_seed = 2024
train.eval_every = 4
train.eval_rollouts = 3
opt.rank_shaping = true
opt.use_baseline = false
morph.enabled = false
"""


def make_reference_policy() -> None:
    env = PlanarHopper()
    part = ParamPartition(policy_len=env.policy_param_count(), morph_len=0)
    cfg = TrainConfig(
        generations=110, population_size=64, rollouts_per_candidate=1,
        master_seed=1, eval_every=10, eval_rollouts=4,
    )
    opt = OptimizerConfig(population_size=64, rank_shaping=True, use_baseline=False)
    state = train(cfg, env, part, opt)
    morph = env.default_morph_spec().original
    score, steps = env.rollout_params(morph, state.best_params, 0)
    print(f"reference policy: eval {state.best_avg_score:.3f}, "
          f"direct rollout {score:.3f} over {steps} steps")
    out = DATA_DIR / "hopper_reference_policy.txt"
    lines = [format(v, ".17g") for v in state.best_params]
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


def make_baseline_trace() -> None:
    cfg = parse_config(BASELINE_TRACE_CONFIG)
    env = cfg.make_env()
    state = train(cfg.train, env, cfg.partition(env), cfg.opt)
    out = DATA_DIR / "baseline_trace.txt"
    lines = ["# fixed-morphology reference trace: gen mean best sigma_mean best_avg"]
    lines.append("config-digest-source:")
    lines.extend("| " + line for line in serialize_config(cfg).splitlines())
    for row in state.history:
        lines.append(
            f"{row.generation} {row.mean_fitness!r} {row.best_fitness!r} "
            f"{row.sigma_mean!r} {row.best_avg_score!r}"
        )
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(state.history)} rows)")


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    make_reference_policy()
    make_baseline_trace()
