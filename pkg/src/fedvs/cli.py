"""Command-line entry point: ``fedvs run --config <path> [...]``.

Metrics are written as one JSON object per line: a ``header`` record with
the resolved config, one ``round`` record per round, and a ``summary``.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import IO, Sequence

from .config import STRATEGIES, ExperimentConfig, load_config
from .errors import FedVSError
from .training import train


def header_record(cfg: ExperimentConfig) -> dict:
    return {"type": "header", "config": cfg.to_dict()}


def run_records(cfg: ExperimentConfig) -> list[dict]:
    records = [header_record(cfg)]
    for item in train(cfg):
        rec = item.to_record()
        rec["seed"] = cfg.seed
        records.append(rec)
    return records


def write_records(records: Sequence[dict], out: IO[str]) -> None:
    for rec in records:
        out.write(json.dumps(rec) + "\n")


def run_experiment(cfg: ExperimentConfig, out: IO[str], sweep_seeds: int = 1, workers: int = 1) -> int:
    """Run one seed (or a sweep of consecutive seeds) and write metrics; returns an exit code."""
    configs = [cfg.replace(seed=cfg.seed + k) for k in range(sweep_seeds)]
    if workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_records, configs))
    else:
        results = [run_records(c) for c in configs]
    for records in results:
        write_records(records, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedvs", description="Coded split-VFL simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write line-delimited metrics")
    run.add_argument("--config", type=Path, help="flat key = value config file")
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--seed", type=int)
    run.add_argument("--rounds", type=int)
    run.add_argument("--out", type=Path, help="metrics file (default: stdout)")
    run.add_argument("--sweep-seeds", type=int, default=1, metavar="K", help="run seeds seed..seed+K-1")
    run.add_argument("--workers", type=int, default=1, help="threads for a seed sweep")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides: dict = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            print(json.dumps({"type": "error", "error": "ParseError", "message": f"bad --set {item!r}"}), file=sys.stderr)
            return 2
        overrides[key.strip()] = value
    overrides.update(strategy=args.strategy, seed=args.seed, rounds=args.rounds)
    try:
        if args.sweep_seeds < 1:
            raise ValueError("--sweep-seeds must be >= 1")
        cfg = load_config(args.config, overrides)
        if args.out is None:
            return run_experiment(cfg, sys.stdout, args.sweep_seeds, args.workers)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            return run_experiment(cfg, fh, args.sweep_seeds, args.workers)
    except (FedVSError, ValueError, OSError) as exc:
        err = {"type": "error", "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
