"""Command-line surface.

Exit codes: 0 success, 1 usage problems (bad flags, missing arguments,
malformed config), 2 runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys

from .. import scenarios as scenario_pkg
from .config import ConfigError, RunConfig, load_config, parse_config
from .evaluate import evaluate, load_for_eval
from .heatmap import emit_heatmaps
from .train import TrainingDiverged, train


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage failures instead of exiting with 2."""

    def error(self, message):
        raise UsageError(message)


class UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="hillfort", description="Hill-combat multi-agent RL toolkit")
    sub = parser.add_subparsers(dest="command")

    p_train = sub.add_parser("train", help="run the training protocol")
    p_train.add_argument("--config", required=True, help="flat key = value config file")
    p_train.add_argument("--out", default="runs/latest", help="output directory")
    p_train.add_argument("--seed", type=int, default=None, help="override config seed")
    p_train.add_argument("--algo", default=None, help="override config algorithm")
    p_train.add_argument("--scenario", default=None, help="override config scenario")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    p_eval.add_argument("--ckpt", required=True)
    p_eval.add_argument("--scenario", required=True)
    p_eval.add_argument("--episodes", type=int, required=True)
    p_eval.add_argument("--algo", default="qmix")
    p_eval.add_argument("--config", default=None, help="optional config for network sizes")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--replay-dir", default=None, help="write per-episode replay logs here")

    p_heat = sub.add_parser("heatmap", help="ally occupancy heat-map from replay logs")
    p_heat.add_argument("--logs", required=True, help="directory of .jsonl replays")
    p_heat.add_argument("--out", required=True, help="output CSV path")
    p_heat.add_argument("--logs-late", default=None, help="second log set for an early/late pair")

    p_scen = sub.add_parser("scenarios", help="list or validate the scenario suite")
    p_scen.add_argument("action", choices=["list", "validate"])

    p_sweep = sub.add_parser("sweep", help="run one config across parameter values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="dotted config key to vary")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", default="runs/sweep")
    return parser


def _apply_param(cfg_text: str, key: str, value: str) -> str:
    """Override one dotted key in config text, appending if absent."""
    lines = []
    replaced = False
    for line in cfg_text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped.startswith(key) and stripped[len(key) :].lstrip().startswith("="):
            lines.append(f"{key} = {value}")
            replaced = True
        else:
            lines.append(line)
    if not replaced:
        lines.append(f"{key} = {value}")
    return "\n".join(lines)


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.algo is not None:
        cfg.algo = args.algo
    if args.scenario is not None:
        cfg.scenario = args.scenario
    cfg.validate()
    rows = train(cfg, args.out)
    evals = [r for r in rows if r["eval_winrate"] is not None]
    final = evals[-1]["eval_winrate"] if evals else float("nan")
    print(f"trained {cfg.algo} on {cfg.scenario}: final win-rate {final}")
    print(f"metrics: {os.path.join(args.out, 'metrics.csv')}")
    return 0


def _cmd_eval(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    cfg.algo = args.algo
    cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    learner, env = load_for_eval(args.ckpt, cfg)
    result = evaluate(learner, env, args.episodes, replay_dir=args.replay_dir)
    print(f"win-rate {result['win_rate']} ({result['wins']}/{result['episodes']})")
    return 0


def _cmd_heatmap(args) -> int:
    written = emit_heatmaps(args.logs, args.out, args.logs_late)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_scenarios(args) -> int:
    if args.action == "list":
        for name in scenario_pkg.BUILTIN_NAMES:
            sc = scenario_pkg.load_scenario(name)
            print(f"{name}: {sc.n_agents} allies vs {sc.n_enemies} enemies, supply {sc.supply_gap():+d}")
        return 0
    bad = 0
    for name in scenario_pkg.BUILTIN_NAMES + scenario_pkg.EXTRA_NAMES:
        sc = scenario_pkg.load_scenario(name)
        violations = scenario_pkg.validate(sc)
        if violations:
            bad += 1
            print(f"{name}: {'; '.join(violations)}")
        else:
            print(f"{name}: ok")
    return 2 if bad else 0


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        base_text = fh.read()
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise UsageError("--values is empty")
    launched = 0
    for value in values:
        cfg = parse_config(_apply_param(base_text, args.param, value))
        run_dir = os.path.join(args.out, f"{args.param.replace('.', '_')}_{value}")
        train(cfg, run_dir)
        launched += 1
        print(f"run {launched}/{len(values)}: {args.param}={value} -> {run_dir}")
    print(f"{launched} runs complete")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "heatmap":
            return _cmd_heatmap(args)
        if args.command == "scenarios":
            return _cmd_scenarios(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        raise UsageError(f"unknown command {args.command}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse -h exits 0
        code = exc.code if exc.code is not None else 0
        return 0 if code == 0 else 1
    except (TrainingDiverged, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
