"""Command-line front end: run single scenarios, reproduce the figure
sweeps, validate configs.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation problem.
Worker count for sweeps comes from the SKYTRAFFIC_WORKERS environment
variable (default: all cores).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .config import (ConfigError, load_scenario, validation_report,
                     write_manifest)
from .engine import ScenarioError, run_scenario
from .metrics import summarize, write_metrics_csv
from .presets import PRESETS, run_figure

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def cmd_run(args) -> int:
    try:
        sc = load_scenario(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        sc = dataclasses.replace(sc, seed=args.seed)
    if args.no_interactions:
        sc = dataclasses.replace(sc, no_interactions=True)
    violations = sc.validate()
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rec = run_scenario(sc)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    rec.write_csv(out / "record.csv")
    row = {"seed": sc.seed, **summarize(rec, sc.scheme, sc.params.r_coll)}
    write_metrics_csv(out / "metrics.csv", [row])
    write_manifest(out / "manifest.json", sc)
    print(f"run complete: {rec.n_agents} agents, {rec.duration:.0f} s, "
          f"{len(rec.arrivals)} arrivals")
    print(f"  v_eff = {row['v_eff']:.3f} m/s, throughput = {row['throughput']:.3f} 1/s, "
          f"collision risk = {row['collision_risk']:.3g}")
    print(f"  outputs in {out}")
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.preset not in PRESETS:
        print(f"unknown preset {args.preset!r}; options: {', '.join(sorted(PRESETS))}",
              file=sys.stderr)
        return EXIT_USAGE
    if not 0.0 < args.scale <= 1.0:
        print(f"--scale must be in (0, 1], got {args.scale}", file=sys.stderr)
        return EXIT_USAGE
    try:
        paths = run_figure(args.preset, args.scale, args.out, seed=args.seed,
                           no_interactions=args.no_interactions)
    except ScenarioError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"figure failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    violations, table = validation_report(sc)
    print(table)
    if violations:
        print(f"\n{len(violations)} violation(s):", file=sys.stderr)
        for v in violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_USAGE
    print("\nconfig OK")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skytraffic",
        description="Decentralized aerial traffic simulation kit",
    )
    parser.add_argument("--version", action="version", version=f"skytraffic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a YAML config")
    p_run.add_argument("--config", "-c", required=True, help="scenario YAML file")
    p_run.add_argument("--out", "-o", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--no-interactions", action="store_true",
                       help="null model: disable all agent-agent interactions")
    p_run.set_defaults(func=cmd_run)

    p_fig = sub.add_parser("figure", help="run a figure preset sweep")
    p_fig.add_argument("preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    p_fig.add_argument("--out", "-o", required=True, help="output directory")
    p_fig.add_argument("--scale", type=float, default=0.1,
                       help="protocol scale in (0, 1]: multiplies seeds and duration (default 0.1)")
    p_fig.add_argument("--seed", type=int, default=0, help="base seed")
    p_fig.add_argument("--no-interactions", action="store_true",
                       help="null model: disable all agent-agent interactions")
    p_fig.set_defaults(func=cmd_figure)

    p_val = sub.add_parser("validate", help="check a config and print resolved parameters")
    p_val.add_argument("--config", "-c", required=True, help="scenario YAML file")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
