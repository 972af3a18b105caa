#!/usr/bin/env python3
"""
PCA Lab Command Line

Runs the registered experiments over a list of seeds and writes a CSV of
result rows plus a JSON summary.

Usage:
    python pca_lab.py list
    python pca_lab.py describe epca-lossless
    python pca_lab.py run --experiment epca-lossless --dim 64 --k 8 --eps 0.1 --seeds 1..20
    python pca_lab.py run --config data/examples/online_oja.toml --jobs 4

Exit codes:
    0  every row passed (EXPECTED-FAIL-OF-REDUCTION counts as a pass)
    1  at least one row failed
    2  usage or configuration error
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

from experiments import (
    CSV_COLUMNS,
    EXPECTED_FAIL,
    EXPERIMENTS,
    ExperimentConfig,
    ExperimentFactory,
    ResultRow,
    parse_seeds,
    run_seed,
)
from pca_config import DEFAULT_SEED
from pca_errors import PcaLabError

EXIT_OK = 0
EXIT_FAILED_ROWS = 1
EXIT_USAGE = 2

# CLI flag -> experiment parameter
FLAG_PARAMS = {
    "dim": "d",
    "k": "k",
    "eps": "eps",
    "delta": "delta",
    "gamma": "gamma",
    "Delta": "Delta",
    "Gamma": "Gamma",
}


def _number_list(cast):
    def parse(text: str) -> List[Any]:
        try:
            return [cast(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None

    return parse


def run(config: ExperimentConfig) -> List[ResultRow]:
    """
    Execute an experiment for every seed in the config

    Seeds run in a process pool when jobs > 1; rows come back in seed order
    either way.

    Args:
        config: Validated experiment config

    Returns:
        All result rows, grouped by seed in config order
    """
    name, params, timing = config.experiment, config.params, config.timing
    if config.jobs == 1 or len(config.seeds) == 1:
        per_seed = [run_seed(name, params, seed, timing) for seed in config.seeds]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(run_seed, name, params, seed, timing) for seed in config.seeds]
            per_seed = [future.result() for future in futures]
    return [row for rows in per_seed for row in rows]


def summarize(config: ExperimentConfig, rows: Sequence[ResultRow]) -> Dict[str, Any]:
    passed = sum(1 for row in rows if row.passed)
    return {
        "experiment": config.experiment,
        "rows": len(rows),
        "passed": passed,
        "failed": len(rows) - passed,
        "expected_failures": sum(1 for row in rows if row.status == EXPECTED_FAIL),
        "pass_rate": passed / len(rows) if rows else 1.0,
        "config": config.to_dict(),
    }


def write_reports(config: ExperimentConfig, rows: Sequence[ResultRow]) -> Tuple[str, str]:
    """
    Write <out>/<experiment>.csv and <out>/<experiment>.json

    Returns:
        Tuple of (csv_path, json_path)
    """
    os.makedirs(config.out, exist_ok=True)
    csv_path = os.path.join(config.out, f"{config.experiment}.csv")
    json_path = os.path.join(config.out, f"{config.experiment}.json")

    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv_row(config.timing))

    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(summarize(config, rows), f, indent=2)
        f.write("\n")

    return csv_path, json_path


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) with CLI flags applied on top"""
    overrides = {param: getattr(args, flag) for flag, param in FLAG_PARAMS.items() if getattr(args, flag) is not None}
    settings: Dict[str, Any] = {}
    if args.seeds is not None:
        settings["seeds"] = parse_seeds(args.seeds)
    if args.out is not None:
        settings["out"] = args.out
    if args.jobs is not None:
        settings["jobs"] = args.jobs
    if args.no_timing:
        settings["timing"] = False

    if args.config:
        config = ExperimentConfig.from_toml(args.config)
        if args.experiment and ExperimentFactory.create_experiment(args.experiment).name != config.experiment:
            raise ValueError(f"--experiment {args.experiment} conflicts with config experiment {config.experiment}")
        return config.with_overrides(overrides, **settings)

    if not args.experiment:
        raise ValueError("run needs --experiment or --config")
    settings.setdefault("seeds", [DEFAULT_SEED])
    return ExperimentConfig(args.experiment, params=overrides, **settings)


def cmd_list() -> int:
    print(f"🧪 Available experiments ({len(EXPERIMENTS)}):")
    for name, experiment in EXPERIMENTS.items():
        print(f"  {name:<24} {experiment.summary}")
    return EXIT_OK


def cmd_describe(name: str) -> int:
    experiment = ExperimentFactory.create_experiment(name)
    print(f"🔍 {experiment.name}\n")
    print(experiment.description)
    print("\nDefaults:")
    for key, value in experiment.defaults.items():
        print(f"  {key} = {value!r}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = build_config(args)
    except (PcaLabError, ValueError, OSError) as e:
        print(f"❌ Error: {e}")
        return EXIT_USAGE

    print(f"🚀 Running {config.experiment} on {len(config.seeds)} seed(s) with {config.jobs} job(s)")
    try:
        rows = run(config)
    except PcaLabError as e:
        print(f"❌ Error: {e}")
        return EXIT_FAILED_ROWS

    csv_path, json_path = write_reports(config, rows)
    summary = summarize(config, rows)
    print(f"📁 Rows written: {csv_path}")
    print(f"📁 Summary written: {json_path}")
    print(f"📊 {summary['passed']}/{summary['rows']} rows passed ({summary['expected_failures']} expected failures)")

    if summary["failed"]:
        for row in rows:
            if not row.passed:
                print(f"  ❌ seed={row.seed} d={row.d} k={row.k} measured={row.measured:.3e} bound={row.bound:.3e}")
        return EXIT_FAILED_ROWS

    print("🎉 All rows passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pca-lab", description="Black-box PCA deflation experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run an experiment over a list of seeds")
    run_parser.add_argument("--experiment", help="Experiment id (see 'pca-lab list')")
    run_parser.add_argument("--config", help="TOML experiment config (schema = 1)")
    run_parser.add_argument("--dim", type=_number_list(int), help="Dimension(s), comma-separated")
    run_parser.add_argument("--k", type=_number_list(int), help="Number(s) of components, comma-separated")
    run_parser.add_argument("--eps", type=_number_list(float), help="ePCA error or corruption fraction(s)")
    run_parser.add_argument("--delta", type=_number_list(float), help="Per-call cPCA mass (invalid-regime: alias of --Delta)")
    run_parser.add_argument("--gamma", type=_number_list(float), help="Per-call cPCA gap")
    run_parser.add_argument("--Delta", type=_number_list(float), help="Target cPCA mass")
    run_parser.add_argument("--Gamma", type=_number_list(float), help="Target cPCA gap")
    run_parser.add_argument("--seeds", help="Seeds: 1..20, 1,2,5 or a single integer (default: PCA_LAB_SEED)")
    run_parser.add_argument("--out", help="Report directory (default: PCA_LAB_OUTPUT_DIR)")
    run_parser.add_argument("--jobs", type=int, help="Worker processes (default: PCA_LAB_JOBS)")
    run_parser.add_argument("--no-timing", action="store_true", help="Write 0 in the ms column for byte-identical reruns")

    commands.add_parser("list", help="List experiment ids")

    describe_parser = commands.add_parser("describe", help="Show an experiment's description and defaults")
    describe_parser.add_argument("experiment", help="Experiment id")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command line interface for pca-lab"""
    args = build_parser().parse_args(argv)

    if args.command == "list":
        return cmd_list()
    if args.command == "describe":
        try:
            return cmd_describe(args.experiment)
        except ValueError as e:
            print(f"❌ Error: {e}")
            return EXIT_USAGE
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
