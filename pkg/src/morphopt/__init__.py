"""morphopt: joint optimization of control policies and body designs.

A population-based REINFORCE optimizer over a factored Gaussian search
distribution learns one flat parameter vector that carries both a policy
network's weights and the raw morphology parameters of the agent's body.
Desk-scale deterministic environments make the morphology-learning claims
checkable end to end.
"""

from .env_core import (
    AugmentationSpec,
    EnvironmentBinding,
    MorphologySpec,
    ParamPartition,
    augment_reward,
    decode_morphology,
    split,
)
from .es_optimizer import (
    OptimizerConfig,
    Population,
    SearchDistribution,
    estimate_gradient,
    init_distribution,
    log_prob_grads,
    sample_population,
    update,
)
from .policy_net import MLPPolicy, NetworkShape, forward, pack, unpack
from .seeding import mix_seed
from .trainer import (
    HistoryRow,
    RunSummary,
    TrainConfig,
    TrainState,
    evaluate_candidate,
    multi_run,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentationSpec",
    "EnvironmentBinding",
    "HistoryRow",
    "MLPPolicy",
    "MorphologySpec",
    "NetworkShape",
    "OptimizerConfig",
    "ParamPartition",
    "Population",
    "RunSummary",
    "SearchDistribution",
    "TrainConfig",
    "TrainState",
    "augment_reward",
    "decode_morphology",
    "estimate_gradient",
    "evaluate_candidate",
    "forward",
    "init_distribution",
    "log_prob_grads",
    "mix_seed",
    "multi_run",
    "pack",
    "sample_population",
    "split",
    "train",
    "unpack",
    "update",
]
