"""Command-line entry point: ``covsem {train,eval,sweep,heatmap}``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, TrainingError
from . import runner
from .config import ALGORITHM_NAMES, ExperimentConfig


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covsem", description="Covert semantic transmission experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment JSON (defaults are used when omitted)")
    common.add_argument("--algorithm", choices=ALGORITHM_NAMES, help="overrides agent.algorithm")
    common.add_argument("--seed", type=int, help="run this single seed instead of run.seeds")
    common.add_argument("--out", help="output directory (overrides run.out_dir)")
    common.add_argument("--log-level", default="WARNING")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train and write curve/metrics/checkpoints")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint (or train first) into metrics.csv")
    ev.add_argument("--checkpoint", help="checkpoint written by train")
    sw = sub.add_parser("sweep", parents=[common], help="train/evaluate across one axis")
    sw.add_argument("--axis", required=True, choices=sorted(runner.SWEEP_AXES))
    sw.add_argument("--values", required=True, type=_int_list)
    hm = sub.add_parser("heatmap", parents=[common], help="per-slot monitoring/transmission frequencies")
    hm.add_argument("--checkpoint", help="checkpoint written by train")
    return parser


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.load(path) if path else ExperimentConfig()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        seeds = None if args.seed is None else (args.seed,)
        kw = {"out_dir": args.out, "algorithm": args.algorithm}
        if args.command == "train":
            records = runner.run_train(cfg, seeds=seeds, **kw)
            for r in records:
                print(f"{r.algorithm} seed={r.seed} mean_return={r.evaluation.mean_return:.4f} "
                      f"private_prob={r.evaluation.private_prob:.3f}")
        elif args.command == "eval":
            for seed, s in zip(seeds or cfg.run.seeds, runner.run_eval(cfg, seeds=seeds, checkpoint=args.checkpoint, **kw)):
                print(f"seed={seed} mean_return={s.mean_return:.4f} E_U={s.E_U:.4f} E_A={s.E_A:.4f} "
                      f"private_prob={s.private_prob:.3f}")
        elif args.command == "sweep":
            rows = runner.run_sweep(cfg, args.axis, args.values, seeds=seeds, **kw)
            for r in rows:
                print(f"{args.axis}={r['axis_value']} seed={r['seed']} E_A={r['E_A']:.4f} "
                      f"private_prob={r['private_prob']:.3f}")
        else:
            seed = None if args.seed is None else args.seed
            rows = runner.emit_slot_heatmap(cfg, out_dir=args.out, algorithm=args.algorithm, seed=seed,
                                            checkpoint=args.checkpoint)
            for r in rows:
                print(f"slot={r['slot']} detect={r['detect_freq']:.3f} transmit={r['transmit_freq']:.3f}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (TrainingError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
