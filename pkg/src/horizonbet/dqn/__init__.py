"""From-scratch Double-DQN betting agent: numpy MLP, replay, training loop."""

from .features import FEATURE_DIM, FEATURE_NAMES, feature_schema_hash, features, feature_matrix
from .net import AdamW, QNet, huber, td_loss_grads, td_update
from .replay import ReplayBuffer
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .policy import DqnStrategy, VecDqn, greedy_actions
from .train import (
    TrainConfig,
    TrainResult,
    desk_scale_ranges,
    evaluate_policy,
    train,
    write_metrics_csv,
)

__all__ = [
    "FEATURE_DIM", "FEATURE_NAMES", "feature_schema_hash", "features",
    "feature_matrix", "AdamW", "QNet", "huber", "td_loss_grads", "td_update",
    "ReplayBuffer", "CheckpointError", "load_checkpoint", "save_checkpoint",
    "DqnStrategy", "VecDqn", "greedy_actions", "TrainConfig", "TrainResult",
    "desk_scale_ranges", "evaluate_policy", "train", "write_metrics_csv",
]
