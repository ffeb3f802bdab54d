"""Command-line entry point.

Subcommands: ``run`` (one policy on one scenario), ``sweep`` (one axis, many
policies), ``oracle`` (brute-force optimum of a small instance) and
``selftest`` (quick property checks). Exit codes: 0 success, 1 configuration
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import selftest
from .agent import agent_config_from_dict
from .baselines import POLICY_NAMES
from .costmodel import brute_force_optimum
from .errors import ConfigError, InvalidArgument
from .harness import AXES, FORMATS, export, format_summary, load_sweep, run_cell, \
    run_sweep, summarize, sweep_from_dict, to_csv, to_json
from .scenario import PRESETS, load_json, scenario_from_dict
from .topology import generate_tasks

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, seed_default=0):
    p.add_argument("--config", help="scenario (run/oracle) or sweep (sweep) JSON file")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--seed", type=int, default=None, help=f"base seed (default {seed_default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="secoffload", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="train (if needed) and evaluate one policy")
    _common(run)
    run.add_argument("--policy", default="SARMTO", help=f"one of {', '.join(POLICY_NAMES)}")
    run.add_argument("--episodes", type=int, default=300)
    run.add_argument("--eval-episodes", type=int, default=20)
    run.add_argument("--out")
    run.add_argument("--format", choices=FORMATS, default="csv")

    sw = sub.add_parser("sweep", help="run a parameter sweep")
    _common(sw)
    sw.add_argument("--axis", choices=AXES, help="overrides the config file")
    sw.add_argument("--values", type=float, nargs="+")
    sw.add_argument("--policy", dest="policies", nargs="+", help="one or more policies")
    sw.add_argument("--repetitions", type=int)
    sw.add_argument("--episodes", type=int)
    sw.add_argument("--eval-episodes", type=int)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=FORMATS, default="csv")

    orc = sub.add_parser("oracle", help="brute-force optimum of a small random instance")
    _common(orc)
    orc.add_argument("--tasks", type=int, default=4)

    sub.add_parser("selftest", help="run quick property checks")
    return parser


def _scenario(args):
    data = load_json(args.config) if args.config else {}
    return scenario_from_dict(data, args.preset), data


def cmd_run(args) -> int:
    scenario, data = _scenario(args)
    try:
        agent = agent_config_from_dict(data.get("agent", {}))
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError(f"invalid agent settings: {exc}") from exc
    seed = scenario.seed if args.seed is None else args.seed
    row = run_cell(scenario, args.policy, seed=seed, episodes=args.episodes,
                   eval_episodes=args.eval_episodes, agent=agent)
    if args.out:
        export([row], args.out, args.format)
    else:
        sys.stdout.write(to_csv([row]) if args.format == "csv" else to_json([row]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        sweep = load_sweep(args.config, args.preset)
    elif args.axis and args.values:
        sweep = sweep_from_dict({"axis": args.axis, "values": args.values, "preset": args.preset})
    else:
        raise ConfigError("sweep needs --config or both --axis and --values")
    changes = {}
    if args.axis:
        changes["axis"] = args.axis
    if args.values:
        changes["values"] = tuple(int(v) if v.is_integer() else v for v in args.values)
    for key in ("policies", "repetitions", "episodes", "eval_episodes", "seed"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if changes:
        sweep = replace(sweep, **changes)

    def progress(row):
        print(f"{row.policy:<7} {sweep.axis}={row.axis_value:g} rep={row.repetition} "
              f"cost={row.system_cost:.6g} offload={row.offloading_rate:.3f}", file=sys.stderr)

    rows = run_sweep(sweep, out=args.out, fmt=args.format, progress=progress)
    if not args.out:
        sys.stdout.write(to_csv(rows) if args.format == "csv" else to_json(rows))
    print(format_summary(summarize(rows)), file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario, _ = _scenario(args)
    if args.tasks < 1:
        raise ConfigError("--tasks must be >= 1")
    seed = scenario.seed if args.seed is None else args.seed
    cfg = scenario.tasks
    tasks = generate_tasks(args.tasks, cfg.data_size_bits, cfg.deadline_s, cfg.mix,
                           rng=np.random.default_rng(seed))
    topo = scenario.build_topology()
    best = brute_force_optimum(tasks, topo, scenario.weights, scenario.security)
    for task, node in zip(tasks, best.assignment or ()):
        print(f"task {task.id}: {task.data_bytes} B class {task.app_class.label} "
              f"deadline {task.deadline:.3f} s -> node {node}")
    status = "feasible" if best.feasible else "no deadline-feasible assignment"
    print(f"optimum cost {best.cost:.9g} ({status}; {best.evaluated} assignments evaluated)")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        if args.command == "selftest":
            return EXIT_OK if selftest.run_all() else EXIT_RUNTIME
        return {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # anything else is a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
