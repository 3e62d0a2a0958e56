"""Action encoding, exploration noise and agent hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import RadioParams
from ..env import IDLE, ActionCommand
from ..errors import ContractViolation


@dataclass(frozen=True)
class TD3Config:
    tau: float = 0.005
    policy_delay: int = 2
    explore_noise_std: float = 0.2
    explore_noise_clip: float = 0.5
    target_noise_std: float = 0.2
    target_noise_clip: float = 0.5
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    batch_size: int = 64
    alpha: float = 2.0
    iterations: int = 75
    episodes_per_iteration: int = 10
    # None -> one update per environment step collected in the iteration
    updates_per_iteration: int | None = None
    warmup_episodes: int = 10
    buffer_capacity: int = 10_000
    hidden: tuple[int, ...] = (128, 128)
    refresh_priorities: bool = True
    explore_with_target: bool = True
    # weight of mean squared actor pre-activation; keeps tanh heads out of saturation
    preact_penalty: float = 1e-3
    # DQN-only knobs
    dqn_levels: int = 10
    dqn_eps_start: float = 1.0
    dqn_eps_end: float = 0.05
    dqn_eps_fraction: float = 0.5
    dqn_target_sync: int = 250

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ContractViolation("tau must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ContractViolation("policy_delay must be >= 1")
        if self.explore_noise_clip <= 0 or self.target_noise_clip <= 0:
            raise ContractViolation("noise clips must be > 0")
        if self.batch_size < 1 or self.iterations < 0 or self.episodes_per_iteration < 1:
            raise ContractViolation("batch_size and episodes_per_iteration must be >= 1")
        if self.preact_penalty < 0:
            raise ContractViolation("preact_penalty must be >= 0")
        if self.alpha < 0:
            raise ContractViolation("alpha must be >= 0")
        if self.dqn_levels < 1:
            raise ContractViolation("dqn_levels must be >= 1")


@dataclass(frozen=True)
class AgentSpec:
    """Which structural features an actor-critic variant uses."""

    name: str
    twin_critics: bool = True
    target_smoothing: bool = True
    delayed_policy: bool = True
    prioritized: bool = True
    extra: dict = field(default_factory=dict)


PS_TD3 = AgentSpec("ps-td3")
TD3 = AgentSpec("td3", prioritized=False)
DDPG = AgentSpec("ddpg", twin_critics=False, target_smoothing=False, delayed_policy=False, prioritized=False)


def encode_action(actor_out, mask, radio: RadioParams) -> ActionCommand:
    """Map ``[K scores, IDLE score, power]`` in [-1, 1] to an env command.

    Selection is the first maximal score among legal entries; power is the
    affine image of the last coordinate on ``[0, p_S_max]``.
    """
    out = np.asarray(actor_out, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if out.ndim != 1 or len(out) != len(mask) + 1:
        raise ContractViolation(f"actor output length {out.shape} does not match mask length {len(mask)}")
    if not mask.any():
        raise ContractViolation("no legal selection")
    scores = np.where(mask, out[:-1], -np.inf)
    choice = int(np.argmax(scores))
    if choice == len(mask) - 1:
        return ActionCommand(IDLE, 0.0)
    coord = min(max(float(out[-1]), -1.0), 1.0)
    return ActionCommand(choice, (coord + 1.0) / 2.0 * radio.p_S_max)


def explore(actor, obs, rng, cfg: TD3Config) -> np.ndarray:
    """Actor output plus clipped Gaussian noise, clamped to [-1, 1]."""
    base = actor.forward(obs)
    noise = np.clip(rng.normal(0.0, cfg.explore_noise_std, size=base.shape),
                    -cfg.explore_noise_clip, cfg.explore_noise_clip)
    return np.clip(base + noise, -1.0, 1.0)
