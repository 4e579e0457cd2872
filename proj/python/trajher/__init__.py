"""Cube-carry goal-trajectory RL: DDPG with asymmetric hindsight relabeling.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its public surface.
"""

from ._core import (  # noqa: F401
    ACTION_DIM,
    EPISODE_STEPS,
    OBSERVATION_DIM,
    SEGMENT_STEPS,
    ConfigError,
    CubeCarryEnv,
    InputError,
    StateError,
    compute_reward,
    config_digest,
    default_config,
    evaluate_checkpoint,
    is_success,
    score_rollout_log,
    train,
)

__all__ = [
    "ACTION_DIM",
    "EPISODE_STEPS",
    "OBSERVATION_DIM",
    "SEGMENT_STEPS",
    "ConfigError",
    "CubeCarryEnv",
    "InputError",
    "StateError",
    "compute_reward",
    "config_digest",
    "default_config",
    "evaluate_checkpoint",
    "is_success",
    "score_rollout_log",
    "train",
]
