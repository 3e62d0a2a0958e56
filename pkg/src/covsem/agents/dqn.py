"""Deep Q-network baseline over a (selection x power level) grid."""

from __future__ import annotations

import numpy as np

from ..channel import RadioParams
from ..env import IDLE, ActionCommand
from ..errors import ContractViolation, TrainingError
from ..neural import Adam, DenseNet
from ..replay import UniformBuffer
from .common import TD3Config


def power_levels(L: int, p_max: float) -> np.ndarray:
    if L < 1:
        raise ContractViolation("need at least one power level")
    if L == 1:
        return np.array([p_max])
    return np.linspace(0.0, p_max, L)


class DQNAgent:
    def __init__(self, obs_dim: int, K: int, radio: RadioParams, cfg: TD3Config,
                 discount: float = 1.0, seed: int = 0):
        self.K = K
        self.L = cfg.dqn_levels
        self.levels = power_levels(self.L, radio.p_S_max)
        self.n_actions = (K + 1) * self.L
        self.cfg = cfg
        self.discount = discount
        rng = np.random.default_rng(seed)
        self.q = DenseNet([obs_dim, *cfg.hidden, self.n_actions], "identity", rng=rng)
        self.target_q = self.q.clone()
        self.opt = Adam(self.q.params, lr=cfg.lr_critic)
        self.updates = 0
        self.epsilon = cfg.dqn_eps_start

    def legal_actions(self, mask) -> np.ndarray:
        """Expand a (K+1) selection mask over the power grid."""
        return np.repeat(np.asarray(mask, dtype=bool), self.L)

    def decode(self, index: int) -> ActionCommand:
        sel, lvl = divmod(int(index), self.L)
        if sel == self.K:
            return ActionCommand(IDLE, 0.0)
        return ActionCommand(sel, float(self.levels[lvl]))

    def greedy(self, obs, mask) -> int:
        legal = self.legal_actions(mask)
        if not legal.any():
            raise ContractViolation("no legal action")
        q = np.where(legal, self.q.forward(obs), -np.inf)
        return int(np.argmax(q))

    def act(self, obs, mask, rng, explore=True) -> int:
        if explore and rng.random() < self.epsilon:
            return int(rng.choice(np.flatnonzero(self.legal_actions(mask))))
        return self.greedy(obs, mask)

    def set_epsilon(self, progress: float):
        cfg = self.cfg
        frac = min(1.0, progress / cfg.dqn_eps_fraction) if cfg.dqn_eps_fraction > 0 else 1.0
        self.epsilon = cfg.dqn_eps_start + frac * (cfg.dqn_eps_end - cfg.dqn_eps_start)

    def make_buffer(self):
        return UniformBuffer(self.cfg.buffer_capacity)

    def target(self, batch) -> np.ndarray:
        q_next = self.target_q.forward(batch["s_next"])
        legal = np.repeat(batch["mask_next"], self.L, axis=1)
        q_next = np.where(legal, q_next, -np.inf)
        best = np.max(q_next, axis=1)
        best = np.where(np.isfinite(best), best, 0.0)
        return batch["r"] + self.discount * (1.0 - batch["done"]) * best

    def update(self, buffer, rng):
        batch, _ = buffer.sample(self.cfg.batch_size, rng)
        y = self.target(batch)
        idx = batch["a"][:, 0].astype(np.int64)
        q, acts = self.q.forward_train(batch["s"])
        B = len(y)
        err = q[np.arange(B), idx] - y
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise TrainingError("non-finite DQN loss")
        upstream = np.zeros_like(q)
        upstream[np.arange(B), idx] = (2.0 / B) * err
        grads, _ = self.q.backward_cached(acts, upstream)
        self.opt.step(self.q.params, grads)
        self.updates += 1
        if self.updates % self.cfg.dqn_target_sync == 0:
            self.target_q = self.q.clone()
        return [loss]

    def state_dict(self):
        out = {}
        out.update(self.q.state_dict("q."))
        out.update(self.target_q.state_dict("target_q."))
        return out

    def load_state_dict(self, tensors):
        self.q.load_state_dict(tensors, "q.")
        self.target_q.load_state_dict(tensors, "target_q.")

    def check_finite(self):
        for p in self.q.params:
            if not np.all(np.isfinite(p)):
                raise TrainingError("non-finite network parameter")
