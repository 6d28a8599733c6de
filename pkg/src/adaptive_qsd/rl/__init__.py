"""Reinforcement-learning agent for adaptive qubit-by-qubit measurement."""
from .checkpoint import load_checkpoint, save_checkpoint
from .env import BatchRollout, MeasurementEnv, Trajectory
from .network import Adam, Mlp, PolicyValueNet
from .ppo import PpoConfig, TrainResult, compute_advantages, greedy_policy, ppo_loss, ppo_update, train

__all__ = [
    "Adam", "BatchRollout", "MeasurementEnv", "Mlp", "PolicyValueNet", "PpoConfig",
    "TrainResult", "Trajectory", "compute_advantages", "greedy_policy", "load_checkpoint", "ppo_loss",
    "ppo_update", "save_checkpoint", "train",
]
