"""Interaction/update loops for every learner plus seeded evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..env import IDLE, ActionCommand, CovertSemanticEnv, EpisodeMetrics
from ..errors import TrainingError
from ..replay import Transition
from .common import DDPG, PS_TD3, TD3, AgentSpec, TD3Config, encode_action
from .dqn import DQNAgent
from .td3 import ActorCriticAgent

log = logging.getLogger(__name__)

Policy = Callable[[np.ndarray, np.ndarray], ActionCommand]

# stream ids for derive_seed
_INIT, _TRAIN_EP, _EVAL_EP, _ACT, _REPLAY, _NOISE = range(6)


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


def eval_seeds(master: int, episodes: int) -> list[int]:
    return [derive_seed(master, _EVAL_EP, i) for i in range(episodes)]


@dataclass
class EvalSummary:
    episodes: int
    mean_return: float
    std_return: float
    E_U: float
    E_A: float
    private_prob: float
    delivery_pct: float
    transmit_freq: np.ndarray
    monitor_freq: np.ndarray
    detect_freq: np.ndarray
    returns: np.ndarray
    max_return_error: float = 0.0
    violations: int = 0


@dataclass
class IterationRecord:
    iteration: int
    mean_return: float
    std_return: float
    transmissions: int
    evaluation: EvalSummary | None = None


@dataclass
class TrainResult:
    algorithm: str
    seed: int
    curve: list[IterationRecord]
    agent: object
    transmissions: int = 0
    env_steps: int = 0
    violations: int = 0

    def eval_returns(self) -> np.ndarray:
        return np.array([r.evaluation.mean_return for r in self.curve if r.evaluation is not None])

    @property
    def final(self) -> EvalSummary | None:
        for r in reversed(self.curve):
            if r.evaluation is not None:
                return r.evaluation
        return None


def audit_episode(env: CovertSemanticEnv) -> int:
    """Count breaches of the power cap, once-only/B-per-slot sending and the monitoring budget."""
    bad = 0
    sent = np.zeros(env.K, dtype=int)
    for o in env.outcomes:
        if not 0.0 <= o.power_w <= env.radio.p_S_max:
            bad += 1
        if len(o.transmitted) > env.cfg.B:
            bad += 1
        for k in o.transmitted:
            sent[k] += 1
        for a in o.attackers:
            if a.eavesdropped and not (a.monitored and a.detected and o.transmitted):
                bad += 1
    bad += int(np.count_nonzero(sent > 1))
    if env.done:
        bad += int(np.count_nonzero(sent != 1))
    expected = min(env.cfg.G, env.N)
    bad += int(np.count_nonzero(env.monitor.sum(axis=1) != expected))
    return bad


def run_episode(env: CovertSemanticEnv, policy: Policy, seed: int) -> EpisodeMetrics:
    obs = env.reset(seed)
    done = False
    while not done:
        cmd = policy(obs, env.feasibility_mask())
        obs, _, done, _ = env.step(cmd)
    return env.episode_metrics()


def evaluate(env: CovertSemanticEnv, policy: Policy, seeds) -> EvalSummary:
    rets, eus, eas, priv, deliv = [], [], [], [], []
    tx = np.zeros(env.N)
    mon = np.zeros(env.N)
    det = np.zeros(env.N)
    err = 0.0
    violations = 0
    for s in seeds:
        m = run_episode(env, policy, s)
        rets.append(m.episode_return)
        err = max(err, abs(m.episode_return - env.expected_return()))
        violations += audit_episode(env)
        eus.append(m.E_U_final)
        eas.append(m.E_A_final)
        priv.append(m.private)
        deliv.append(m.triple_delivery_pct)
        tx += m.transmit
        mon += m.monitored
        det += m.detected
    n = len(rets)
    rets = np.array(rets)
    return EvalSummary(
        episodes=n,
        mean_return=float(rets.mean()),
        std_return=float(rets.std()),
        E_U=float(np.mean(eus)),
        E_A=float(np.mean(eas)),
        private_prob=sum(priv) / n,
        delivery_pct=float(np.mean(deliv)),
        transmit_freq=tx / n,
        monitor_freq=mon / n,
        detect_freq=det / n,
        returns=rets,
        max_return_error=err,
        violations=violations,
    )


def random_action(mask, rng, p_max) -> ActionCommand:
    legal = np.flatnonzero(mask)
    choice = int(rng.choice(legal))
    if choice == len(mask) - 1:
        return ActionCommand(IDLE, 0.0)
    return ActionCommand(choice, float(rng.uniform(0.0, p_max)))


def random_policy_fn(rng, p_max) -> Policy:
    return lambda obs, mask: random_action(mask, rng, p_max)


def random_policy(env: CovertSemanticEnv, seed: int, episodes: int = 100) -> EvalSummary:
    """Uniform legal selection and uniform power, evaluated on the standard seeds."""
    rng = np.random.default_rng(derive_seed(seed, _ACT))
    return evaluate(env, random_policy_fn(rng, env.radio.p_S_max), eval_seeds(seed, episodes))


def greedy_policy(agent, env: CovertSemanticEnv) -> Policy:
    if isinstance(agent, DQNAgent):
        return lambda obs, mask: agent.decode(agent.greedy(obs, mask))
    radio = env.radio
    return lambda obs, mask: encode_action(agent.act(obs), mask, radio)


def _iteration_stats(returns):
    r = np.asarray(returns, dtype=float)
    return float(r.mean()), float(r.std())


def train(env: CovertSemanticEnv, cfg: TD3Config, seed: int, spec: AgentSpec = PS_TD3,
          eval_episodes: int = 100, eval_every: int = 1, on_iteration=None, target_hooks=()) -> TrainResult:
    """Alternate interaction and update stages for ``cfg.iterations`` rounds.

    Interaction stores each transition with its insertion-time TD error
    (prioritized variants only). Evaluation runs the noise-free acting
    policy on a fixed set of seeded episodes. ``target_hooks`` are attached
    to the agent and see every critic target batch.
    """
    agent = ActorCriticAgent(env.obs_dim, env.action_dim, cfg, spec, env.cfg.discount,
                             seed=derive_seed(seed, _INIT))
    agent.target_hooks.extend(target_hooks)
    buffer = agent.make_buffer()
    act_rng = np.random.default_rng(derive_seed(seed, _ACT))
    replay_rng = np.random.default_rng(derive_seed(seed, _REPLAY))
    noise_rng = np.random.default_rng(derive_seed(seed, _NOISE))
    seeds_eval = eval_seeds(seed, eval_episodes)
    radio = env.radio
    result = TrainResult(spec.name, seed, [], agent)
    episode_index = 0

    for u in range(cfg.iterations):
        returns = []
        steps = 0
        for e in range(cfg.episodes_per_iteration):
            obs = env.reset(derive_seed(seed, _TRAIN_EP, u, e))
            done = False
            ret = 0.0
            warm = episode_index < cfg.warmup_episodes
            while not done:
                mask = env.feasibility_mask()
                if warm:
                    out = act_rng.uniform(-1.0, 1.0, size=env.action_dim)
                else:
                    out = agent.explore(obs, act_rng)
                cmd = encode_action(out, mask, radio)
                obs2, r, done, outcome = env.step(cmd)
                delta = agent.insertion_delta(obs, out, r, obs2, done) if spec.prioritized else None
                buffer.push(Transition(obs, out, r, obs2, done), delta)
                result.transmissions += len(outcome.transmitted)
                ret += r
                steps += 1
                obs = obs2
            result.violations += audit_episode(env)
            returns.append(ret)
            episode_index += 1
        result.env_steps += steps
        n_updates = cfg.updates_per_iteration if cfg.updates_per_iteration is not None else steps
        if len(buffer) >= cfg.batch_size:
            for _ in range(n_updates):
                agent.update(buffer, replay_rng, noise_rng)
        agent.check_finite()
        mean_r, std_r = _iteration_stats(returns)
        rec = IterationRecord(u, mean_r, std_r, result.transmissions)
        if eval_every and (u + 1) % eval_every == 0:
            rec.evaluation = evaluate(env, greedy_policy(agent, env), seeds_eval)
            result.violations += rec.evaluation.violations
        result.curve.append(rec)
        if on_iteration is not None:
            on_iteration(rec)
        log.debug("%s seed=%d it=%d return=%.3f", spec.name, seed, u, mean_r)
    return result


def td3_train(env, cfg, seed, **kw) -> TrainResult:
    return train(env, cfg, seed, spec=TD3, **kw)


def ddpg_train(env, cfg, seed, **kw) -> TrainResult:
    return train(env, cfg, seed, spec=DDPG, **kw)


def dqn_train(env: CovertSemanticEnv, cfg: TD3Config, seed: int, eval_episodes: int = 100,
              eval_every: int = 1, on_iteration=None) -> TrainResult:
    agent = DQNAgent(env.obs_dim, env.K, env.radio, cfg, env.cfg.discount, seed=derive_seed(seed, _INIT))
    buffer = agent.make_buffer()
    act_rng = np.random.default_rng(derive_seed(seed, _ACT))
    replay_rng = np.random.default_rng(derive_seed(seed, _REPLAY))
    seeds_eval = eval_seeds(seed, eval_episodes)
    result = TrainResult("dqn", seed, [], agent)
    total_eps = max(1, cfg.iterations * cfg.episodes_per_iteration)
    episode_index = 0
    no_mask = np.zeros(env.K + 1, dtype=bool)

    for u in range(cfg.iterations):
        returns = []
        steps = 0
        for e in range(cfg.episodes_per_iteration):
            agent.set_epsilon(episode_index / total_eps)
            obs = env.reset(derive_seed(seed, _TRAIN_EP, u, e))
            done = False
            ret = 0.0
            mask = env.feasibility_mask()
            while not done:
                idx = agent.act(obs, mask, act_rng)
                obs2, r, done, outcome = env.step(agent.decode(idx))
                mask2 = no_mask if done else env.feasibility_mask()
                buffer.push(Transition(obs, np.array([idx], dtype=float), r, obs2, done, mask_next=mask2))
                result.transmissions += len(outcome.transmitted)
                ret += r
                steps += 1
                obs, mask = obs2, mask2
            result.violations += audit_episode(env)
            returns.append(ret)
            episode_index += 1
        result.env_steps += steps
        n_updates = cfg.updates_per_iteration if cfg.updates_per_iteration is not None else steps
        if len(buffer) >= cfg.batch_size:
            for _ in range(n_updates):
                agent.update(buffer, replay_rng)
        agent.check_finite()
        mean_r, std_r = _iteration_stats(returns)
        rec = IterationRecord(u, mean_r, std_r, result.transmissions)
        if eval_every and (u + 1) % eval_every == 0:
            rec.evaluation = evaluate(env, greedy_policy(agent, env), seeds_eval)
            result.violations += rec.evaluation.violations
        result.curve.append(rec)
        if on_iteration is not None:
            on_iteration(rec)
    return result


ALGORITHMS = {
    "ps-td3": lambda env, cfg, seed, **kw: train(env, cfg, seed, spec=PS_TD3, **kw),
    "td3": td3_train,
    "ddpg": ddpg_train,
    "dqn": dqn_train,
}


def run_algorithm(name: str, env, cfg, seed, **kw) -> TrainResult:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise TrainingError(f"unknown algorithm {name!r}") from None
    return fn(env, cfg, seed, **kw)
