from .common import DDPG, PS_TD3, TD3, AgentSpec, TD3Config, encode_action, explore
from .dqn import DQNAgent, power_levels
from .td3 import ActorCriticAgent
from .training import (
    ALGORITHMS,
    EvalSummary,
    TrainResult,
    ddpg_train,
    dqn_train,
    evaluate,
    random_policy,
    run_algorithm,
    td3_train,
    train,
)

__all__ = [
    "ALGORITHMS", "DDPG", "PS_TD3", "TD3", "ActorCriticAgent", "AgentSpec", "DQNAgent", "EvalSummary",
    "TD3Config", "TrainResult", "ddpg_train", "dqn_train", "encode_action", "evaluate", "explore",
    "power_levels", "random_policy", "run_algorithm", "td3_train", "train",
]
