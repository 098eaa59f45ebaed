"""Command-line surface: run, validate, and bench subcommands.

Exit codes: 0 success, 1 no trial completed, 2 configuration error.
A run writes ``trials.csv`` (always, once the loop has started) and
``report.json`` (on success) into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .benchmarks import BUILTIN_NAMES, default_space, make_builtin
from .config import BuiltinObjective, RunConfig, parse_config
from .errors import ConfigError, GpboError
from .external import make_command_evaluator
from .loop import NoCompletedTrialsError, TrialStatus, optimize
from .space import validate_space
from .trial_log import write_trial_log

EXIT_OK = 0
EXIT_NO_COMPLETED = 1
EXIT_CONFIG = 2


def _make_evaluator(config: RunConfig):
    if isinstance(config.objective, BuiltinObjective):
        return make_builtin(config.objective.name, config.objective.params)
    return make_command_evaluator(config.objective.command, config.objective.timeout)


def run(config: RunConfig, out=None) -> int:
    """Execute a configured optimization run and persist its outputs."""
    out = out if out is not None else sys.stdout
    report = validate_space(config.space)
    if not report.ok:
        for v in report.violations:
            print(f"error: parameter {v.param!r}: {v.message}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        evaluator = _make_evaluator(config)
    except GpboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    began = time.perf_counter()
    try:
        best, experiment = optimize(
            config.space,
            evaluator,
            minimize=config.minimize,
            total_trials=config.total_trials,
            seed=config.seed,
        )
    except NoCompletedTrialsError as exc:
        write_trial_log(exc.experiment, out_dir / "trials.csv")
        print("error: no completed trials", file=sys.stderr)
        return EXIT_NO_COMPLETED
    wall_ms = int((time.perf_counter() - began) * 1000)
    write_trial_log(experiment, out_dir / "trials.csv")
    n_failed = sum(1 for t in experiment.trials if t.status == TrialStatus.FAILED)
    summary = {
        "best_arm": dict(best.arm.values),
        "observed_objective": best.observed_objective,
        "predicted_mean": best.predicted_mean,
        "predicted_sd": best.predicted_sd,
        "n_trials": len(experiment.trials),
        "n_failed": n_failed,
        "seed": config.seed,
        "wall_ms": wall_ms,
    }
    (out_dir / "report.json").write_text(json.dumps(summary, indent=2) + "\n")
    direction = "minimum" if config.minimize else "maximum"
    print(f"best configuration ({direction} over {len(experiment.trials)} trials):", file=out)
    for name, value in best.arm.values.items():
        print(f"  {name} = {value}", file=out)
    print(f"observed objective: {best.observed_objective}", file=out)
    print(f"model prediction: {best.predicted_mean} +- {best.predicted_sd}", file=out)
    print(f"outputs written to {out_dir}", file=out)
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = config.override(out_dir=args.out_dir, seed=args.seed, total_trials=args.trials)
    return run(config)


def _cmd_validate(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = validate_space(config.space)
    for warning in report.warnings:
        print(f"warning: {warning}")
    if not report.ok:
        for v in report.violations:
            print(f"error: parameter {v.param!r}: {v.message}", file=sys.stderr)
        return EXIT_CONFIG
    kind = (
        f"builtin '{config.objective.name}'"
        if isinstance(config.objective, BuiltinObjective)
        else f"command {config.objective.command!r}"
    )
    print(
        f"ok: {len(config.space.params)} parameter(s), d={config.space.d}, "
        f"objective {kind}, {config.total_trials} trial(s), seed {config.seed}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.name not in BUILTIN_NAMES:
        print(
            f"error: unknown benchmark {args.name!r}; choose from {', '.join(BUILTIN_NAMES)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    config = RunConfig(
        space=default_space(args.name),
        objective=BuiltinObjective(name=args.name, params={}),
        out_dir=args.out_dir or f"bench_{args.name}",
    )
    config = config.override(seed=args.seed, total_trials=args.trials)
    return run(config)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gpbo",
        description="Sequential Bayesian optimization over a JSON-configured search space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an optimization from a config file")
    p_run.add_argument("config", help="path to a JSON run configuration")
    p_run.add_argument("--out-dir", help="override the config's output directory")
    p_run.add_argument("--seed", type=int, help="override the config's seed")
    p_run.add_argument("--trials", type=int, help="override the config's total_trials")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="parse and validate a config without running")
    p_val.add_argument("config", help="path to a JSON run configuration")
    p_val.set_defaults(func=_cmd_validate)

    p_bench = sub.add_parser("bench", help="run a built-in benchmark with defaults")
    p_bench.add_argument("name", help=f"one of: {', '.join(BUILTIN_NAMES)}")
    p_bench.add_argument("--out-dir", help="output directory (default bench_<name>)")
    p_bench.add_argument("--seed", type=int, help="run seed (default 0)")
    p_bench.add_argument("--trials", type=int, help="trial budget (default 20)")
    p_bench.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
