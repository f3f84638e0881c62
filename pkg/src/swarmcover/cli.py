"""Command-line entry points: train, eval, export-traj."""

from __future__ import annotations

import argparse
import sys

from .config import Variant, load_run_config
from .trainer import Trainer, evaluate, export_trajectory

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmcover",
        description="Train and evaluate swarm coverage policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a policy from a config file")
    train.add_argument("--config", required=True, help="flat key = value config file")
    train.add_argument("--arch", choices=[v.value for v in Variant], help="critic wiring")
    train.add_argument("--aggregator", choices=["on", "off"], help="neighborhood mixing")
    train.add_argument("--seed", type=int)
    train.add_argument("--episodes", type=int)
    train.add_argument("--out", help="output directory for metrics and checkpoints")

    ev = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--config", required=True)
    ev.add_argument("--episodes", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)

    export = sub.add_parser("export-traj", help="dump one greedy episode as plain rows")
    export.add_argument("--checkpoint", required=True)
    export.add_argument("--config", required=True)
    export.add_argument("--seed", type=int, default=0)
    export.add_argument("--out", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {
        "variant": args.arch,
        "seed": args.seed,
        "episodes": args.episodes,
        "out_dir": args.out,
    }
    if args.aggregator is not None:
        out["aggregator"] = args.aggregator == "on"
    return out


def _cmd_train(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    history = Trainer(cfg).run()
    last = history[-1]
    print(f"trained {cfg.episodes} episodes -> {cfg.out_dir}")
    print(
        f"final episode: reward={last.mean_reward:.3f} "
        f"coverage={last.coverage_index:.3f} energy={last.energy_index:.3f}"
    )
    return 0


def _cmd_eval(args) -> int:
    cfg = load_run_config(args.config)
    summary = evaluate(args.checkpoint, cfg.env, args.episodes, args.seed)
    if summary["episodes"] == 0:
        print(summary["notice"])
        return 0
    print(f"evaluated {summary['episodes']} episodes")
    for key in ("reward", "coverage_index", "energy_index", "connected_fraction"):
        stats = summary[key]
        print(f"{key}: {stats['mean']:.4f} +/- {stats['std']:.4f}")
    return 0


def _cmd_export(args) -> int:
    cfg = load_run_config(args.config)
    export_trajectory(args.checkpoint, cfg.env, args.seed, args.out)
    print(f"wrote trajectory to {args.out}")
    return 0


_COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "export-traj": _cmd_export}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # one-line reason, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
