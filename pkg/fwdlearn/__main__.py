"""Fwdlearn Main Module

Command line interface of fwdlearn.

Usage:
    fwdlearn gen --system pendulum --episodes 48 --max-len 1100 --seed 0 --out data.fwdb
    fwdlearn train-rl [--config FILE|PRESET] [--set key=value ...] [--seed S] [--out DIR]
    fwdlearn train-sl [--config FILE|PRESET] [--set key=value ...] [--seed S] [--out DIR]
    fwdlearn eval-rollout --checkpoint FILE [--config ...] [--lengths 50,100] [--episodes N] [--oracle] [--out DIR]
    fwdlearn report --metrics LABEL=CSV[,CSV...] ... [--rollouts LABEL=CSV ...] [--traces CSV ...] --out DIR
    fwdlearn render --checkpoint FILE [--config ...] [--episode I] [--h H] --out FILE.gif
    fwdlearn compare [--config ...] --seeds 0,1,2 --out DIR

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training fault.

License: MIT
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import FwdlearnError
from fwdlearn.core.logs import configure_logging
from fwdlearn.utils.version import vernum

__all__ = ["build_parser", "main"]

logger = logging.getLogger("fwdlearn.cli")


# region Argument helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _labelled(text: str) -> tuple[str, list[str]]:
    label, sep, paths = text.partition("=")
    if not sep or not label or not paths:
        raise argparse.ArgumentTypeError(f"expected LABEL=PATH[,PATH...], got {text!r}")
    return label, [p for p in paths.split(",") if p]


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="built-in preset name or configuration file (JSON or key = value)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override one key")
    parser.add_argument("--seed", type=int, help="run seed")


def _manager(args: argparse.Namespace, out_key: str | None = "out_dir"):
    from fwdlearn.config.manager import ConfigManager

    manager = ConfigManager(args.config)
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        manager.set_value(key.strip(), value.strip())
    if args.seed is not None:
        manager.set_value("seed", args.seed)
    if out_key and getattr(args, "out", None):
        manager.set_value(out_key, str(args.out))
    return manager


def _apply_log_level(args: argparse.Namespace, config) -> None:
    if args.log_level is None:
        configure_logging(config.log_level)


# endregion

# region Commands


def cmd_gen(args: argparse.Namespace) -> int:
    from fwdlearn.systems.dataset import filter_episodes
    from fwdlearn.systems.dataset import generate_dataset
    from fwdlearn.systems.dynamics import make_system
    from fwdlearn.systems.io import save_dataset

    behaviors = [b.strip() for b in args.behaviors.split(",") if b.strip()]
    dataset = generate_dataset(
        make_system(args.system, dt=args.dt),
        behaviors,
        args.episodes,
        args.max_len,
        args.seed,
        min_len=args.min_len,
        workers=args.workers,
    )
    if args.filter_min_len is not None:
        dataset = filter_episodes(dataset, args.filter_min_len)
    path = save_dataset(args.out, dataset)
    logger.info("gen system=%s episodes=%d out=%s", args.system, len(dataset), path)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    from fwdlearn.harness.training import train_rl
    from fwdlearn.harness.training import train_sl

    manager = _manager(args)
    config = manager.build()
    _apply_log_level(args, config)
    train = train_rl if args.command == "train-rl" else train_sl
    result = train(config, manager)
    print(f"model={result.model_path} metrics={result.metrics_path} updates={result.summary['total_updates']}")
    return 0


def _load_for_eval(args: argparse.Namespace):
    """Resolve config, prepared data, the agent and the environment settings it needs."""
    from fwdlearn.agents.oracle import TrueDeltaAgent
    from fwdlearn.agents.persist import load_agent
    from fwdlearn.harness.training import prepare_data

    manager = _manager(args, out_key=None)
    config = manager.build()
    _apply_log_level(args, config)
    data = prepare_data(config)
    if getattr(args, "oracle", False):
        return config, data, TrueDeltaAgent, config.env, data.bounds
    if not args.checkpoint:
        raise ConfigError("--checkpoint is required unless --oracle is given")
    agent = load_agent(args.checkpoint)
    if agent.system.name != config.system:
        raise ConfigError(f"checkpoint models {agent.system.name!r}, config system is {config.system!r}")
    policy = agent.policy
    env_config = dataclasses.replace(config.env, window_w=policy.window_w)
    return config, data, agent, env_config, policy.bound.detach().cpu().numpy()


def cmd_eval_rollout(args: argparse.Namespace) -> int:
    from fwdlearn.harness.evaluation import eval_rollouts
    from fwdlearn.harness.evaluation import write_rollout_csv
    from fwdlearn.harness.evaluation import write_trace_csv
    from fwdlearn.harness.report import plot_rollout_sweep

    config, data, agent, env_config, bounds = _load_for_eval(args)
    lengths = args.lengths or list(config.eval.lengths)
    n_episodes = args.episodes or config.eval.n_episodes
    rows, traces = eval_rollouts(
        agent, data.holdout, env_config, bounds, lengths, n_episodes, config.seed, keep_traces=config.eval.overlay_episodes > 0
    )
    out = Path(args.out)
    table = write_rollout_csv(rows, out / "rollouts.csv")
    plot_rollout_sweep({"oracle" if args.oracle else "model": rows}, out / "rollout_sweep.svg")
    for h, kept in traces.items():
        for trace in kept[: config.eval.overlay_episodes]:
            write_trace_csv(trace, out / "traces" / f"trace_h{h}_ep{trace.episode_index}.csv")
    for row in rows:
        if row.absent:
            print(f"h={row.h} absent")
        else:
            print(f"h={row.h} rmse={row.mean_rmse:.6g} std={row.std_rmse:.6g} reward={row.mean_reward:.6g}")
    logger.info("eval-rollout table=%s", table)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from fwdlearn.harness.report import render_report

    metrics: dict[str, list[str]] = {}
    for label, paths in args.metrics:
        metrics.setdefault(label, []).extend(paths)
    rollouts = {}
    for label, paths in args.rollouts:
        if len(paths) != 1:
            raise ConfigError(f"--rollouts takes one table per label, got {len(paths)} for {label!r}")
        rollouts[label] = paths[0]
    written = render_report(metrics, args.out, rollouts=rollouts, traces=args.traces)
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    from fwdlearn.harness.evaluation import rollout_episode
    from fwdlearn.harness.render import render_rollout_gif

    config, data, agent, env_config, bounds = _load_for_eval(args)
    if not 0 <= args.episode < len(data.holdout):
        raise ConfigError(f"--episode must lie in [0, {len(data.holdout)}), got {args.episode}")
    trace = rollout_episode(agent, data.holdout, env_config, bounds, args.episode, args.h or env_config.rollout_h)
    path = render_rollout_gif(trace, data.holdout.system, args.out)
    print(f"rendered {path} rmse={trace.rmse:.6g}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from fwdlearn.harness.compare import run_comparison

    manager = _manager(args, out_key=None)
    config = manager.build()
    _apply_log_level(args, config)
    result = run_comparison(config, args.seeds, args.out, tolerance=args.tolerance)
    print(f"{result.verdict}: {result.reason}")
    return 0


# endregion


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwdlearn", description="Learn forward models with reinforcement learning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {vernum}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: from config)")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a trajectory dataset")
    gen.add_argument("--system", default="pendulum")
    gen.add_argument("--episodes", type=int, required=True)
    gen.add_argument("--max-len", type=int, required=True)
    gen.add_argument("--min-len", type=int)
    gen.add_argument("--behaviors", default="random,sinusoid,bang_bang")
    gen.add_argument("--filter-min-len", type=int)
    gen.add_argument("--dt", type=float)
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="target file (.fwdt or .fwdb)")
    gen.set_defaults(handler=cmd_gen)

    for name, text in (("train-rl", "train the SAC forward model"), ("train-sl", "train the supervised baseline")):
        train = commands.add_parser(name, help=text)
        _add_config_options(train)
        train.add_argument("--out", help="output directory")
        train.set_defaults(handler=cmd_train)

    ev = commands.add_parser("eval-rollout", help="rollout-size sweep of a checkpoint")
    _add_config_options(ev)
    ev.add_argument("--checkpoint")
    ev.add_argument("--lengths", type=_int_list)
    ev.add_argument("--episodes", type=int)
    ev.add_argument("--oracle", action="store_true", help="evaluate the scripted true-delta agent instead")
    ev.add_argument("--out", required=True)
    ev.set_defaults(handler=cmd_eval_rollout)

    report = commands.add_parser("report", help="SVG charts and summary from metrics CSVs")
    report.add_argument("--metrics", type=_labelled, action="append", default=[], metavar="LABEL=CSV[,CSV...]")
    report.add_argument("--rollouts", type=_labelled, action="append", default=[], metavar="LABEL=CSV")
    report.add_argument("--traces", nargs="+", default=[])
    report.add_argument("--out", required=True)
    report.set_defaults(handler=cmd_report)

    render = commands.add_parser("render", help="animated GIF of one rollout")
    _add_config_options(render)
    render.add_argument("--checkpoint", required=True)
    render.add_argument("--episode", type=int, default=0, help="index into the hold-out pool")
    render.add_argument("--h", type=int)
    render.add_argument("--out", required=True)
    render.set_defaults(handler=cmd_render)

    compare = commands.add_parser("compare", help="RL vs SL over several seeds")
    _add_config_options(compare)
    compare.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    compare.add_argument("--tolerance", type=float, default=0.1)
    compare.add_argument("--out", required=True)
    compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or "INFO")
    try:
        return args.handler(args)
    except FwdlearnError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
