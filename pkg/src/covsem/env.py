"""Episodic covert semantic transmission environment.

One episode is N slots. In every slot the server either sends one pending
triple at a chosen power or stays idle; a friendly jammer draws a random
power; each attacker, when monitoring that slot, runs a radiometer test and
eavesdrops the triple if the test fires and its own link is fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel
from .channel import ATTACKER, USER, DetectorPolicy, LinkGeometry, RadioParams
from .errors import ConfigError, ContractViolation
from .semcore import EmbeddingTable, SemanticGraph, gnt_mask, state_matrix

IDLE = -1
MONITORING_STRATEGIES = ("uniform", "first", "fixed")


@dataclass(frozen=True)
class AttackerSpec:
    d_SA: float
    d_JA: float
    detector: DetectorPolicy = field(default_factory=DetectorPolicy.quantile)
    monitoring: str = "uniform"
    fixed_slots: tuple[int, ...] = ()


@dataclass(frozen=True)
class EpisodeConfig:
    N: int = 12
    B: int = 1
    G: int = 8
    gamma_privacy: float = 0.5
    eta: float = 1.0
    attackers: tuple[AttackerSpec, ...] = (AttackerSpec(d_SA=1.0, d_JA=1.25),)
    discount: float = 1.0
    aux_features: bool = True
    reward_features: bool = True

    def validate(self, K: int) -> None:
        if self.N < 1 or self.B < 1:
            raise ConfigError("N and B must be >= 1", "episode")
        if K > self.N * self.B:
            raise ConfigError(f"K={K} triples cannot fit in N*B={self.N * self.B} slots", "episode.N")
        if not 0 <= self.G <= self.N:
            raise ConfigError("G must lie in [0, N]", "episode.G")
        if not 0 < self.gamma_privacy < 1:
            raise ConfigError("gamma_privacy must lie in (0, 1)", "episode.gamma_privacy")
        if not self.eta > 0:
            raise ConfigError("eta must be > 0", "episode.eta")
        if not 0 < self.discount <= 1:
            raise ConfigError("discount must lie in (0, 1]", "episode.discount")
        if not self.attackers:
            raise ConfigError("at least one attacker is required", "episode.attackers")
        for i, a in enumerate(self.attackers):
            if a.monitoring not in MONITORING_STRATEGIES:
                raise ConfigError(f"unknown monitoring strategy {a.monitoring!r}", f"episode.attackers[{i}].monitoring")
            if a.monitoring == "fixed":
                slots = set(a.fixed_slots)
                if len(slots) != len(a.fixed_slots) or len(slots) != min(self.G, self.N) \
                        or not all(0 <= s < self.N for s in slots):
                    raise ConfigError("fixed_slots must list min(G, N) distinct slots in [0, N)",
                                      f"episode.attackers[{i}].fixed_slots")


@dataclass(frozen=True)
class ActionCommand:
    selection: int | tuple[int, ...]
    power_w: float

    @property
    def ids(self) -> tuple[int, ...]:
        if isinstance(self.selection, tuple):
            return self.selection
        return () if self.selection == IDLE else (int(self.selection),)


@dataclass(frozen=True)
class AttackerSlot:
    monitored: bool
    detected: bool
    eavesdropped: bool


@dataclass(frozen=True)
class SlotOutcome:
    slot: int
    transmitted: tuple[int, ...]
    power_w: float
    p_J: float
    user_success: bool
    attackers: tuple[AttackerSlot, ...]
    step_reward: float
    terminal_reward: float
    reward: float
    E_U: float
    E_A: float

    @property
    def eavesdrop_success(self) -> bool:
        return any(a.eavesdropped for a in self.attackers)


@dataclass(frozen=True)
class EpisodeMetrics:
    E_U_final: float
    E_A_final: float
    private: bool
    triple_delivery_pct: float
    episode_return: float
    transmit: np.ndarray
    monitored: np.ndarray
    detected: np.ndarray


class CovertSemanticEnv:
    """Gym-style ``reset``/``step`` simulator for one server, user and jammer."""

    def __init__(self, graph: SemanticGraph, table: EmbeddingTable, radio: RadioParams,
                 d_SU: float, d_JU: float, beta: float, config: EpisodeConfig):
        if len(table) != graph.K:
            raise ConfigError("embedding table size does not match the graph", "semantic")
        config.validate(graph.K)
        self.graph = graph
        self.table = table
        self.radio = radio
        self.cfg = config
        self.K = graph.K
        self.N = config.N
        self.payload = graph.payload_bits.astype(float)
        self.user_geom = LinkGeometry(d_SU, 1.0, d_JU, 1.0, beta)
        self.attacker_geoms = tuple(LinkGeometry(d_SU, a.d_SA, d_JU, a.d_JA, beta) for a in config.attackers)
        self.obs_dim = self.K * self.K + (2 if config.aux_features else 0) + (2 if config.reward_features else 0)
        self.action_dim = self.K + 2
        self._done = True
        self._started = False

    # -- lifecycle --------------------------------------------------------
    def reset(self, seed: int) -> np.ndarray:
        self.rng = np.random.default_rng(seed)
        G = min(self.cfg.G, self.N)
        self.monitor = np.zeros((len(self.cfg.attackers), self.N), dtype=bool)
        for i, a in enumerate(self.cfg.attackers):
            if a.monitoring == "uniform":
                # prefix of a permutation: larger G monitors a superset of slots
                slots = self.rng.permutation(self.N)[:G]
            elif a.monitoring == "first":
                slots = np.arange(G)
            else:
                slots = np.array(a.fixed_slots, dtype=int)
            self.monitor[i, slots] = True
        self.n = 0
        self.retired = np.zeros(self.K, dtype=bool)
        self.user_rx = np.zeros(self.K, dtype=np.uint8)
        self.att_rx = np.zeros((len(self.cfg.attackers), self.K), dtype=np.uint8)
        self.E_U = 0.0
        self.E_A = 0.0
        self.reward_sum = 0.0
        self.transmit_log = np.zeros(self.N, dtype=bool)
        self.detect_log = np.zeros(self.N, dtype=bool)
        self.outcomes: list[SlotOutcome] = []
        self._done = False
        self._started = True
        return self.observation()

    @property
    def done(self) -> bool:
        return self._done

    def observation(self) -> np.ndarray:
        parts = [state_matrix(self.graph, self.table, self.retired).ravel()]
        if self.cfg.aux_features:
            parts.append([self.n / self.N, np.count_nonzero(~self.retired) / self.K])
        if self.cfg.reward_features:
            # both are recoverable from the reward stream the learner already sees
            parts.append([self.reward_sum, 1.0 if self.E_A <= self.cfg.gamma_privacy else 0.0])
        return np.concatenate(parts)

    def feasibility_mask(self) -> np.ndarray:
        """Legal selections: K triple entries followed by IDLE."""
        if self._done:
            raise ContractViolation("episode is not active")
        mask = np.empty(self.K + 1, dtype=bool)
        mask[: self.K] = ~self.retired
        pending = self.K - int(np.count_nonzero(self.retired))
        slots_left = self.N - self.n
        mask[self.K] = pending <= (slots_left - 1) * self.cfg.B
        return mask

    def _check_action(self, action: ActionCommand) -> tuple[int, ...]:
        ids = action.ids
        if not 0 <= action.power_w <= self.radio.p_S_max:
            raise ContractViolation(f"power {action.power_w} violates the cap {self.radio.p_S_max}")
        if len(ids) > self.cfg.B:
            raise ContractViolation(f"{len(ids)} triples exceed B={self.cfg.B} per slot")
        if len(set(ids)) != len(ids):
            raise ContractViolation("duplicate triple in one slot")
        for k in ids:
            if not 0 <= k < self.K:
                raise ContractViolation(f"unknown triple {k}")
            if self.retired[k]:
                raise ContractViolation(f"triple {k} was already transmitted")
        pending_after = self.K - int(np.count_nonzero(self.retired)) - len(ids)
        if pending_after > (self.N - self.n - 1) * self.cfg.B:
            raise ContractViolation("action leaves pending triples that can no longer be sent")
        return ids

    def step(self, action: ActionCommand):
        if not self._started or self._done:
            raise ContractViolation("step() called on a finished or unstarted episode")
        ids = self._check_action(action)
        radio = self.radio
        p_J = channel.jammer_draw(self.rng, radio)
        p_S = float(action.power_w) if ids else 0.0
        T = radio.latency_threshold_s

        user_ok = False
        if ids:
            rate_u = channel.downlink_rate(p_S, p_J, self.user_geom, USER, radio)
            for k in ids:
                if channel.latency(self.payload[k], rate_u) <= T:
                    self.user_rx[k] = 1
                    user_ok = True
                self.retired[k] = True

        att_slots = []
        for i, a in enumerate(self.cfg.attackers):
            geom = self.attacker_geoms[i]
            monitored = bool(self.monitor[i, self.n])
            detected = eaves = False
            if monitored:
                eps = channel.detector_threshold(a.detector, p_J, geom, radio)
                zeta = channel.received_power(p_S, p_J, geom, ATTACKER, radio)
                detected = bool(channel.detect(zeta, eps))
                if detected and ids:
                    rate_a = channel.downlink_rate(p_S, p_J, geom, ATTACKER, radio)
                    for k in ids:
                        if channel.latency(self.payload[k], rate_a) <= T:
                            self.att_rx[i, k] = 1
                            eaves = True
            att_slots.append(AttackerSlot(monitored, detected, eaves))

        E_U = gnt_mask(self.user_rx, self.table)
        E_A = max(gnt_mask(row, self.table) for row in self.att_rx)
        gamma = self.cfg.gamma_privacy
        step_r = (E_U - self.E_U - E_A + self.E_A) if E_A <= gamma else 0.0
        self.reward_sum += step_r
        self.E_U, self.E_A = E_U, E_A

        self.transmit_log[self.n] = bool(ids)
        self.detect_log[self.n] = any(s.detected for s in att_slots)
        self.n += 1
        terminal = 0.0
        if self.n == self.N:
            # realized return equals E_U - E_A + gamma when private, -eta otherwise
            terminal = gamma if E_A <= gamma else (-self.cfg.eta - self.reward_sum)
            self._done = True
        reward = step_r + terminal
        out = SlotOutcome(self.n - 1, ids, p_S, p_J, user_ok, tuple(att_slots), step_r, terminal, reward, E_U, E_A)
        self.outcomes.append(out)
        return self.observation(), reward, self._done, out

    def episode_metrics(self) -> EpisodeMetrics:
        if not self._done or not self._started:
            raise ContractViolation("episode_metrics() requires a finished episode")
        gamma = self.cfg.gamma_privacy
        private = self.E_A <= gamma
        ret = sum(o.reward for o in self.outcomes)
        return EpisodeMetrics(
            E_U_final=self.E_U,
            E_A_final=self.E_A,
            private=private,
            triple_delivery_pct=100.0 * int(self.user_rx.sum()) / self.K,
            episode_return=ret,
            transmit=self.transmit_log.copy(),
            monitored=self.monitor.any(axis=0),
            detected=self.detect_log.copy(),
        )

    def expected_return(self) -> float:
        """Closed-form episode return from the final GNT values."""
        gamma = self.cfg.gamma_privacy
        if self.E_A <= gamma:
            return self.E_U - self.E_A + gamma
        return -self.cfg.eta
