"""Experiment configuration: JSON schema, defaults and object construction."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..agents.common import TD3Config
from ..channel import DetectorPolicy, RadioParams, dbm_to_watt
from ..env import AttackerSpec, CovertSemanticEnv, EpisodeConfig
from ..errors import ConfigError
from ..semcore import load_embedding_file, synth_embeddings, synth_graph

ALGORITHM_NAMES = ("ps-td3", "td3", "ddpg", "dqn", "random")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SemanticSection(_Strict):
    K: int = Field(8, ge=1)
    d: int = Field(16, ge=2)
    seed: int = 0
    key_count: int = Field(1, ge=0)
    payload_bits: int = Field(400, gt=0)
    embedding_file: str | None = None

    @model_validator(mode="after")
    def _keys_fit(self):
        if self.embedding_file is None and self.key_count > self.K:
            raise ValueError("key_count must not exceed K")
        return self


class GeometrySection(_Strict):
    d_SU: float = Field(1.0, gt=0)
    d_JU: float = Field(4.0, gt=0)
    beta: float = Field(2.0, ge=1)


class RadioSection(_Strict):
    bandwidth_hz: float = Field(2000.0, gt=0)
    sigma2_U_dbm: float = -30.0
    sigma2_A_dbm: float = -30.0
    p_S_max: float = Field(1.0, gt=0)
    p_J_max: float = Field(1.0, gt=0)
    latency_threshold_s: float = Field(0.2, gt=0)


class DetectorSection(_Strict):
    kind: Literal["quantile", "oracle_margin"] = "quantile"
    false_alarm_q: float = Field(0.95, gt=0, lt=1)
    margin_w: float = Field(0.01, ge=0)


class AttackerSection(_Strict):
    d_SA: float = Field(1.0, gt=0)
    d_JA: float = Field(1.25, gt=0)
    detector: DetectorSection = DetectorSection()
    monitoring: Literal["uniform", "first", "fixed"] = "uniform"
    fixed_slots: tuple[int, ...] = ()


def _default_attackers():
    # each further attacker sits relatively farther from the jammer, hence is more dangerous
    return tuple(AttackerSection(d_JA=1.25 + 0.05 * i) for i in range(4))


class EpisodeSection(_Strict):
    N: int = Field(12, ge=1)
    B: int = Field(1, ge=1)
    G: int = Field(8, ge=0)
    gamma_privacy: float = Field(0.5, gt=0, lt=1)
    eta: float = Field(1.0, gt=0)
    discount: float = Field(1.0, gt=0, le=1)
    aux_features: bool = True
    n_attackers: int = Field(1, ge=1)
    attackers: tuple[AttackerSection, ...] = Field(default_factory=_default_attackers)

    @model_validator(mode="after")
    def _pool(self):
        if self.n_attackers > len(self.attackers):
            raise ValueError(f"n_attackers={self.n_attackers} exceeds the {len(self.attackers)} configured attackers")
        return self


class AgentSection(_Strict):
    algorithm: Literal["ps-td3", "td3", "ddpg", "dqn", "random"] = "ps-td3"
    tau: float = Field(0.005, gt=0, le=1)
    policy_delay: int = Field(2, ge=1)
    explore_noise_std: float = Field(0.2, ge=0)
    explore_noise_clip: float = Field(0.5, gt=0)
    target_noise_std: float = Field(0.2, ge=0)
    target_noise_clip: float = Field(0.5, gt=0)
    lr_actor: float = Field(3e-4, gt=0)
    lr_critic: float = Field(3e-4, gt=0)
    batch_size: int = Field(64, ge=1)
    alpha: float = Field(2.0, ge=0)
    episodes_per_iteration: int = Field(10, ge=1)
    updates_per_iteration: int | None = Field(None, ge=0)
    warmup_episodes: int = Field(10, ge=0)
    buffer_capacity: int = Field(10_000, ge=1)
    hidden: tuple[int, ...] = (128, 128)
    refresh_priorities: bool = True
    explore_with_target: bool = True
    preact_penalty: float = Field(1e-3, ge=0)
    dqn_levels: int = Field(10, ge=1)
    dqn_eps_start: float = Field(1.0, ge=0, le=1)
    dqn_eps_end: float = Field(0.05, ge=0, le=1)
    dqn_eps_fraction: float = Field(0.5, ge=0, le=1)
    dqn_target_sync: int = Field(250, ge=1)


class RunSection(_Strict):
    iterations: int = Field(75, ge=0)
    eval_episodes: int = Field(100, ge=1)
    eval_every: int = Field(1, ge=1)
    heatmap_episodes: int = Field(1000, ge=1)
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "runs"


class ExperimentConfig(_Strict):
    semantic: SemanticSection = SemanticSection()
    geometry: GeometrySection = GeometrySection()
    radio: RadioSection = RadioSection()
    episode: EpisodeSection = EpisodeSection()
    agent: AgentSection = AgentSection()
    run: RunSection = RunSection()

    @model_validator(mode="after")
    def _fits(self):
        if self.semantic.embedding_file is None and self.semantic.K > self.episode.N * self.episode.B:
            raise ValueError(f"K={self.semantic.K} triples cannot fit in N*B slots")
        if self.episode.G > self.episode.N:
            raise ValueError("G must not exceed N")
        return self

    # -- (de)serialization --------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            return cls.model_validate(doc)
        except ValidationError as e:
            err = e.errors()[0]
            path = ".".join(str(p) for p in err["loc"])
            raise ConfigError(err["msg"], path or None) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def replace(self, **sections) -> "ExperimentConfig":
        """Copy with whole sections or dotted fields overridden, revalidated."""
        doc = self.to_dict()
        for key, value in sections.items():
            if "__" in key:
                sec, fld = key.split("__", 1)
                doc[sec][fld] = value
            else:
                doc[key] = value
        return ExperimentConfig.from_dict(doc)

    # -- construction ---------------------------------------------------------
    def radio_params(self) -> RadioParams:
        r = self.radio
        return RadioParams(r.bandwidth_hz, dbm_to_watt(r.sigma2_U_dbm), dbm_to_watt(r.sigma2_A_dbm),
                           r.p_S_max, r.p_J_max, r.latency_threshold_s)

    def episode_config(self) -> EpisodeConfig:
        e = self.episode
        attackers = []
        for a in e.attackers[: e.n_attackers]:
            if a.detector.kind == "quantile":
                det = DetectorPolicy.quantile(a.detector.false_alarm_q)
            else:
                det = DetectorPolicy.oracle(a.detector.margin_w)
            attackers.append(AttackerSpec(a.d_SA, a.d_JA, det, a.monitoring, tuple(a.fixed_slots)))
        return EpisodeConfig(e.N, e.B, e.G, e.gamma_privacy, e.eta, tuple(attackers), e.discount, e.aux_features)

    def semantic_inputs(self):
        s = self.semantic
        if s.embedding_file:
            return load_embedding_file(s.embedding_file)
        return synth_graph(s.K, s.payload_bits), synth_embeddings(s.K, s.d, s.seed, s.key_count)

    def build_env(self) -> CovertSemanticEnv:
        graph, table = self.semantic_inputs()
        g = self.geometry
        return CovertSemanticEnv(graph, table, self.radio_params(), g.d_SU, g.d_JU, g.beta, self.episode_config())

    def td3_config(self) -> TD3Config:
        a = self.agent
        fields = a.model_dump()
        fields.pop("algorithm")
        fields["hidden"] = tuple(a.hidden)
        return TD3Config(iterations=self.run.iterations, **fields)
