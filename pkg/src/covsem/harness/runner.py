"""Experiment orchestration: training runs, evaluation, sweeps and slot heatmaps.

Every entry point writes into an output directory and returns plain records.
CSV files are written with fixed column order and ``repr`` floats, so the
same config and seed reproduce them byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agents.common import DDPG, PS_TD3, TD3
from ..agents.dqn import DQNAgent
from ..agents.td3 import ActorCriticAgent
from ..agents.training import (
    EvalSummary,
    TrainResult,
    derive_seed,
    eval_seeds,
    evaluate,
    greedy_policy,
    random_policy,
    random_policy_fn,
    run_algorithm,
    _ACT,
)
from ..errors import ConfigError, TrainingError
from ..neural import load_tensors, save_tensors
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CURVE_FIELDS = ("iteration", "seed", "algorithm", "mean_return", "std_return", "eval_return")
METRIC_FIELDS = ("axis_value", "seed", "algorithm", "E_U", "E_A", "private_prob", "delivery_pct")
HEATMAP_FIELDS = ("slot", "detect_freq", "transmit_freq", "abs_diff")
SWEEP_AXES = {"G": "episode__G", "N": "episode__N", "attackers": "episode__n_attackers"}
_SPECS = {"ps-td3": PS_TD3, "td3": TD3, "ddpg": DDPG}


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    curve_rows: list[dict] = field(default_factory=list)
    evaluation: EvalSummary | None = None
    checkpoint: str | None = None
    agent: object = None


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path: Path, fields, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def _write_summary(out: Path, cfg: ExperimentConfig, stats: dict) -> None:
    doc = {"config": cfg.to_dict(), "statistics": stats}
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _seeds(cfg: ExperimentConfig, seeds):
    return tuple(cfg.run.seeds if seeds is None else seeds)


def _eval_stats(summaries: list[EvalSummary]) -> dict:
    def med(xs):
        return float(statistics.median(xs))
    return {
        "runs": len(summaries),
        "median_mean_return": med([s.mean_return for s in summaries]),
        "median_private_prob": med([s.private_prob for s in summaries]),
        "median_E_U": med([s.E_U for s in summaries]),
        "median_E_A": med([s.E_A for s in summaries]),
        "violations": sum(s.violations for s in summaries),
    }


def metric_row(axis_value, seed, algorithm, s: EvalSummary) -> dict:
    return {"axis_value": axis_value, "seed": seed, "algorithm": algorithm, "E_U": s.E_U, "E_A": s.E_A,
            "private_prob": s.private_prob, "delivery_pct": s.delivery_pct}


# -- single runs ------------------------------------------------------------
def train_one(cfg: ExperimentConfig, seed: int, algorithm: str | None = None, on_iteration=None) -> RunRecord:
    """Train (or, for ``random``, just evaluate) one seed without touching disk."""
    algorithm = algorithm or cfg.agent.algorithm
    env = cfg.build_env()
    rec = RunRecord(algorithm, seed)
    if algorithm == "random":
        summary = random_policy(env, seed, cfg.run.eval_episodes)
        rec.curve_rows.append({"iteration": 0, "seed": seed, "algorithm": algorithm,
                               "mean_return": summary.mean_return, "std_return": summary.std_return,
                               "eval_return": summary.mean_return})
        rec.evaluation = summary
        return rec
    result: TrainResult = run_algorithm(algorithm, env, cfg.td3_config(), seed,
                                        eval_episodes=cfg.run.eval_episodes, eval_every=cfg.run.eval_every,
                                        on_iteration=on_iteration)
    for it in result.curve:
        ev = it.evaluation.mean_return if it.evaluation is not None else ""
        rec.curve_rows.append({"iteration": it.iteration, "seed": seed, "algorithm": algorithm,
                               "mean_return": it.mean_return, "std_return": it.std_return, "eval_return": ev})
    rec.evaluation = result.final
    if rec.evaluation is None:
        rec.evaluation = evaluate(env, greedy_policy(result.agent, env), eval_seeds(seed, cfg.run.eval_episodes))
    rec.agent = result.agent
    return rec


def build_agent(cfg: ExperimentConfig, algorithm: str, env=None):
    env = env if env is not None else cfg.build_env()
    td3 = cfg.td3_config()
    if algorithm == "dqn":
        return DQNAgent(env.obs_dim, env.K, env.radio, td3, env.cfg.discount)
    try:
        spec = _SPECS[algorithm]
    except KeyError:
        raise TrainingError(f"algorithm {algorithm!r} has no network to restore") from None
    return ActorCriticAgent(env.obs_dim, env.action_dim, td3, spec, env.cfg.discount)


def save_checkpoint(path, agent) -> None:
    save_tensors(path, agent.state_dict())


def load_checkpoint(path, cfg: ExperimentConfig, algorithm: str, env=None):
    agent = build_agent(cfg, algorithm, env)
    agent.load_state_dict(load_tensors(path))
    return agent


# -- file-producing operations ----------------------------------------------
def run_train(cfg: ExperimentConfig, out_dir=None, algorithm: str | None = None, seeds=None) -> list[RunRecord]:
    """Train every seed, then write ``curve.csv``, ``metrics.csv``, checkpoints and ``summary.json``."""
    algorithm = algorithm or cfg.agent.algorithm
    out = Path(out_dir or cfg.run.out_dir)
    records = []
    for seed in _seeds(cfg, seeds):
        rec = train_one(cfg, seed, algorithm)
        if algorithm != "random":
            ckpt = out / "ckpt" / f"{algorithm}_seed{seed}.json"
            save_checkpoint(ckpt, rec.agent)
            rec.checkpoint = str(ckpt)
        records.append(rec)
        log.info("trained %s seed=%d final=%.4f", algorithm, seed, rec.evaluation.mean_return)
    write_csv(out / "curve.csv", CURVE_FIELDS, [r for rec in records for r in rec.curve_rows])
    write_csv(out / "metrics.csv", METRIC_FIELDS,
              [metric_row("", rec.seed, algorithm, rec.evaluation) for rec in records])
    _write_summary(out, cfg, {"algorithm": algorithm, **_eval_stats([r.evaluation for r in records]),
                              "checkpoints": [r.checkpoint for r in records if r.checkpoint]})
    return records


def _policy_for(cfg, env, algorithm, seed, checkpoint):
    if algorithm == "random":
        rng = np.random.default_rng(derive_seed(seed, _ACT))
        return random_policy_fn(rng, env.radio.p_S_max)
    if checkpoint is None:
        agent = train_one(cfg, seed, algorithm).agent
    else:
        agent = load_checkpoint(checkpoint, cfg, algorithm, env)
    return greedy_policy(agent, env)


def run_eval(cfg: ExperimentConfig, out_dir=None, algorithm: str | None = None, seeds=None,
             checkpoint=None) -> list[EvalSummary]:
    """Evaluate a frozen policy per seed and write ``metrics.csv``.

    Without a checkpoint the policy is trained first (random needs none).
    """
    algorithm = algorithm or cfg.agent.algorithm
    out = Path(out_dir or cfg.run.out_dir)
    env = cfg.build_env()
    summaries, rows = [], []
    for seed in _seeds(cfg, seeds):
        policy = _policy_for(cfg, env, algorithm, seed, checkpoint)
        s = evaluate(env, policy, eval_seeds(seed, cfg.run.eval_episodes))
        summaries.append(s)
        rows.append(metric_row("", seed, algorithm, s))
    write_csv(out / "metrics.csv", METRIC_FIELDS, rows)
    _write_summary(out, cfg, {"algorithm": algorithm, **_eval_stats(summaries)})
    return summaries


def sweep_config(cfg: ExperimentConfig, axis: str, value: int) -> ExperimentConfig:
    try:
        key = SWEEP_AXES[axis]
    except KeyError:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}", "axis") from None
    return cfg.replace(**{key: int(value)})


def run_sweep(cfg: ExperimentConfig, axis: str, values, out_dir=None, algorithm: str | None = None,
              seeds=None) -> list[dict]:
    """Train/evaluate per (value, seed); infeasible values are skipped and recorded."""
    algorithm = algorithm or cfg.agent.algorithm
    out = Path(out_dir or cfg.run.out_dir)
    rows, skipped = [], []
    per_value: dict = {}
    for value in values:
        try:
            point = sweep_config(cfg, axis, value)
        except ConfigError as e:
            if e.path == "axis":
                raise
            skipped.append({"axis_value": value, "reason": str(e)})
            log.warning("skipping %s=%s: %s", axis, value, e)
            continue
        for seed in _seeds(cfg, seeds):
            s = train_one(point, seed, algorithm).evaluation
            rows.append(metric_row(value, seed, algorithm, s))
            per_value.setdefault(str(value), []).append(s)
    write_csv(out / "metrics.csv", METRIC_FIELDS, rows)
    stats = {"algorithm": algorithm, "axis": axis, "skipped": skipped,
             "points": {v: _eval_stats(ss) for v, ss in per_value.items()}}
    _write_summary(out, cfg, stats)
    return rows


def slot_heatmap(summary: EvalSummary) -> list[dict]:
    """Rows of per-slot monitoring, transmission and |monitoring - idle| frequencies."""
    rows = []
    for n, (det, tx) in enumerate(zip(summary.monitor_freq, summary.transmit_freq)):
        det, tx = float(det), float(tx)
        rows.append({"slot": n, "detect_freq": det, "transmit_freq": tx, "abs_diff": abs(det - (1.0 - tx))})
    return rows


def emit_slot_heatmap(cfg: ExperimentConfig, out_dir=None, algorithm: str | None = None, seed: int | None = None,
                      checkpoint=None) -> list[dict]:
    """Evaluate one policy over ``run.heatmap_episodes`` episodes and write ``heatmap.csv``."""
    algorithm = algorithm or cfg.agent.algorithm
    seed = cfg.run.seeds[0] if seed is None else seed
    out = Path(out_dir or cfg.run.out_dir)
    env = cfg.build_env()
    policy = _policy_for(cfg, env, algorithm, seed, checkpoint)
    summary = evaluate(env, policy, eval_seeds(seed, cfg.run.heatmap_episodes))
    rows = slot_heatmap(summary)
    write_csv(out / "heatmap.csv", HEATMAP_FIELDS, rows)
    _write_summary(out, cfg, {"algorithm": algorithm, "seed": seed, "episodes": summary.episodes,
                              **_eval_stats([summary])})
    return rows
