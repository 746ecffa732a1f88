from .dqn import DqnConfig, ReplayBuffer, greedy_action, q_network, td_targets, train_dqn
from .env import ACTIONS, CorrectionEnv, CorrectionParams, EnvConfig, EnvState, uncorrected_baseline
from .kl import KL_FLOOR, kl_divergence, l1_distance

__all__ = [
    "ACTIONS",
    "CorrectionEnv",
    "CorrectionParams",
    "DqnConfig",
    "EnvConfig",
    "EnvState",
    "KL_FLOOR",
    "ReplayBuffer",
    "greedy_action",
    "kl_divergence",
    "l1_distance",
    "q_network",
    "td_targets",
    "train_dqn",
    "uncorrected_baseline",
]
