"""Command line entry point: ``run``, ``plan`` and ``gen`` subcommands."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .envs import generate
from .harness import ConfigError, ExperimentConfig, emit_plot_data, run_experiment
from .mdp import load_instance, save_instance
from .planning import instance_parameters


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seeds:
        cfg.seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if args.diagnostics:
        cfg.emit_diagnostics = True
    out = args.out or cfg.output_dir
    result = run_experiment(cfg, out)
    result.paths.update(emit_plot_data([result], out))
    s = result.summary
    print(json.dumps({k: s[k] for k in ("k", "b_star", "t_star", "horizon", "m_intervals",
                                         "final_regret_mean", "final_regret_stderr",
                                         "incomplete_runs")}, indent=2))
    return 0


def _cmd_plan(args) -> int:
    ip = instance_parameters(load_instance(args.instance))
    print(json.dumps(ip.to_dict(), indent=2))
    return 0


def _cmd_gen(args) -> int:
    params = json.loads(args.params) if args.params else {}
    mdp = generate(args.name, params, args.seed)
    save_instance(mdp, args.out)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sspreduce", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a seeded experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seeds", help="comma-separated seeds (overrides the config)")
    p.add_argument("--diagnostics", action="store_true", help="write per-replan JSON lines")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plan", help="print B*, T*, D and the initial optimal cost of an instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--name", required=True, help="random_ssp, chain_ssp or lower_bound")
    p.add_argument("--params", default="{}", help="generator parameters as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
