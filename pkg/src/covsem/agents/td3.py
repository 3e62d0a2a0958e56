"""Deterministic actor-critic learner covering PS-TD3, plain TD3 and DDPG.

The variant is chosen by an ``AgentSpec``: twin critics with clipped
double-Q targets, target-policy smoothing, delayed actor updates and
prioritized replay can each be switched off.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from ..neural import Adam, DenseNet, soft_update
from ..replay import PrioritizedBuffer, UniformBuffer
from .common import PS_TD3, AgentSpec, TD3Config, explore


class ActorCriticAgent:
    def __init__(self, obs_dim: int, action_dim: int, cfg: TD3Config, spec: AgentSpec = PS_TD3,
                 discount: float = 1.0, seed: int = 0):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.cfg = cfg
        self.spec = spec
        self.discount = discount
        init_rng = np.random.default_rng(seed)
        hidden = list(cfg.hidden)
        self.actor = DenseNet([obs_dim, *hidden, action_dim], "tanh", rng=init_rng)
        n_critics = 2 if spec.twin_critics else 1
        self.critics = [DenseNet([obs_dim + action_dim, *hidden, 1], "identity", rng=init_rng)
                        for _ in range(n_critics)]
        self.target_actor = self.actor.clone()
        self.target_critics = [c.clone() for c in self.critics]
        self.actor_opt = Adam(self.actor.params, lr=cfg.lr_actor)
        self.critic_opts = [Adam(c.params, lr=cfg.lr_critic) for c in self.critics]
        self.policy_delay = cfg.policy_delay if spec.delayed_policy else 1
        self.critic_updates = 0
        self.actor_updates = 0
        self._since_actor = 0
        # called as hook(y, r, done, q_next_per_critic, discount) on every target batch
        self.target_hooks = []

    # -- acting -----------------------------------------------------------
    @property
    def acting_actor(self) -> DenseNet:
        return self.target_actor if self.cfg.explore_with_target else self.actor

    def act(self, obs) -> np.ndarray:
        return self.acting_actor.forward(obs)

    def explore(self, obs, rng) -> np.ndarray:
        return explore(self.acting_actor, obs, rng, self.cfg)

    def make_buffer(self):
        if self.spec.prioritized:
            return PrioritizedBuffer(self.cfg.buffer_capacity, alpha=self.cfg.alpha)
        return UniformBuffer(self.cfg.buffer_capacity)

    # -- targets ----------------------------------------------------------
    def _q(self, nets, s, a):
        x = np.concatenate([s, a], axis=1)
        return [n.forward(x)[:, 0] for n in nets]

    def td3_target(self, batch, rng) -> np.ndarray:
        s2 = batch["s_next"]
        a2 = self.target_actor.forward(s2)
        if self.spec.target_smoothing:
            noise = np.clip(rng.normal(0.0, self.cfg.target_noise_std, size=a2.shape),
                            -self.cfg.target_noise_clip, self.cfg.target_noise_clip)
            a2 = np.clip(a2 + noise, -1.0, 1.0)
        q_next = self._q(self.target_critics, s2, a2)
        q_min = q_next[0] if len(q_next) == 1 else np.minimum(q_next[0], q_next[1])
        y = batch["r"] + self.discount * (1.0 - batch["done"]) * q_min
        for hook in self.target_hooks:
            hook(y, batch["r"], batch["done"], q_next, self.discount)
        return y

    def insertion_delta(self, s, a, r, s_next, done) -> float:
        """|TD error| of a fresh transition, noise-free target action."""
        s = np.asarray(s)[None, :]
        a = np.asarray(a)[None, :]
        s2 = np.asarray(s_next)[None, :]
        if done:
            boot = 0.0
        else:
            a2 = self.target_actor.forward(s2)
            boot = min(q[0] for q in self._q(self.target_critics, s2, a2))
        q1 = self._q(self.critics[:1], s, a)[0][0]
        return abs(r + self.discount * boot - q1)

    # -- updates ----------------------------------------------------------
    def critic_update(self, batch, rng):
        y = self.td3_target(batch, rng)
        x = np.concatenate([batch["s"], batch["a"]], axis=1)
        B = len(y)
        losses = []
        abs_delta = None
        for critic, opt in zip(self.critics, self.critic_opts):
            q, acts = critic.forward_train(x)
            err = q[:, 0] - y
            if abs_delta is None:
                abs_delta = np.abs(err)
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise TrainingError("non-finite critic loss")
            losses.append(loss)
            grads, _ = critic.backward_cached(acts, (2.0 / B) * err[:, None])
            opt.step(critic.params, grads)
        self.critic_updates += 1
        self._since_actor += 1
        return losses, abs_delta

    def actor_update(self, batch):
        s = batch["s"]
        B = s.shape[0]
        a, a_acts = self.actor.forward_train(s)
        critic = self.critics[0]
        _, c_acts = critic.forward_train(np.concatenate([s, a], axis=1))
        # ascend mean Q: minimize -mean Q
        _, dx = critic.backward_cached(c_acts, np.full((B, 1), -1.0 / B))
        lam = self.cfg.preact_penalty
        extra = (2.0 * lam / B) * self.actor.output_preactivation(a_acts) if lam > 0 else None
        grads, _ = self.actor.backward_cached(a_acts, dx[:, self.obs_dim:], extra)
        self.actor_opt.step(self.actor.params, grads)
        tau = self.cfg.tau
        soft_update(self.target_actor.params, self.actor.params, tau)
        for tgt, onl in zip(self.target_critics, self.critics):
            soft_update(tgt.params, onl.params, tau)
        self.actor_updates += 1
        self._since_actor = 0

    def update(self, buffer, rng, noise_rng=None):
        """One sample/critic step; actor + target step when the delay is met."""
        batch, ids = buffer.sample(self.cfg.batch_size, rng)
        losses, abs_delta = self.critic_update(batch, noise_rng if noise_rng is not None else rng)
        if self.cfg.refresh_priorities:
            buffer.update_priorities(ids, abs_delta)
        if self._since_actor >= self.policy_delay:
            self.actor_update(batch)
        return losses

    # -- persistence ------------------------------------------------------
    def state_dict(self):
        out = {}
        out.update(self.actor.state_dict("actor."))
        out.update(self.target_actor.state_dict("target_actor."))
        for i, (c, t) in enumerate(zip(self.critics, self.target_critics)):
            out.update(c.state_dict(f"critic{i + 1}."))
            out.update(t.state_dict(f"target_critic{i + 1}."))
        return out

    def load_state_dict(self, tensors):
        self.actor.load_state_dict(tensors, "actor.")
        self.target_actor.load_state_dict(tensors, "target_actor.")
        for i, (c, t) in enumerate(zip(self.critics, self.target_critics)):
            c.load_state_dict(tensors, f"critic{i + 1}.")
            t.load_state_dict(tensors, f"target_critic{i + 1}.")

    def check_finite(self):
        nets = [self.actor, self.target_actor, *self.critics, *self.target_critics]
        for net in nets:
            for p in net.params:
                if not np.all(np.isfinite(p)):
                    raise TrainingError("non-finite network parameter")
