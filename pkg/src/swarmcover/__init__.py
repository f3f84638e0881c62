"""Connectivity-preserving UAV swarm coverage: simulation and on-policy training."""

from .autodiff import Tensor, backward
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import (
    Architecture,
    EnvConfig,
    RunConfig,
    TrainConfig,
    Variant,
    load_run_config,
)
from .env import (
    N_ACTIONS,
    CoverageEnv,
    StepOutcome,
    WorldState,
    decode_action,
    is_connected,
    observation_dim,
    observation_layout,
)
from .nets import Adam, Mlp, MlpSpec, aggregate_neighbors, categorical_sample, mixing_matrix
from .policy import ActorCriticPolicy
from .ppo import (
    PPOUpdater,
    RolloutBatch,
    TrainingDiverged,
    actor_loss,
    compute_gae,
    compute_returns,
    critic_loss,
    normalize_advantages,
)
from .trainer import (
    EpisodeMetrics,
    Trainer,
    evaluate,
    export_trajectory,
    policy_from_checkpoint,
)

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "backward",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "Architecture",
    "EnvConfig",
    "RunConfig",
    "TrainConfig",
    "Variant",
    "load_run_config",
    "N_ACTIONS",
    "CoverageEnv",
    "StepOutcome",
    "WorldState",
    "decode_action",
    "is_connected",
    "observation_dim",
    "observation_layout",
    "Adam",
    "Mlp",
    "MlpSpec",
    "aggregate_neighbors",
    "categorical_sample",
    "mixing_matrix",
    "ActorCriticPolicy",
    "PPOUpdater",
    "RolloutBatch",
    "TrainingDiverged",
    "actor_loss",
    "compute_gae",
    "compute_returns",
    "critic_loss",
    "normalize_advantages",
    "EpisodeMetrics",
    "Trainer",
    "evaluate",
    "export_trajectory",
    "policy_from_checkpoint",
]
