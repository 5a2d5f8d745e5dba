"""Command line entry point: ``stochsched {estimate,ratio,sweep,verify}``.

Exit codes: 0 on success, 1 when a ``verify`` criterion fails, 2 on a bad
config (unreadable file, invalid JSON, unknown family or mechanism, ...).
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, rows_to_csv, rows_to_json, sweep

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    # a bare cell is shorthand for {"cells": [cell]}
    if "n" in config and "grid" not in config and "cells" not in config:
        config = {"cells": [config]}
    return config


def _apply_overrides(config: dict, args) -> dict:
    config = dict(config)
    cells = [dict(c) for c in config.get("cells", [])]
    for key in ("seed", "trials"):
        value = getattr(args, key)
        if value is None:
            continue
        if value < (0 if key == "seed" else 1):
            raise ConfigError(f"--{key} out of range: {value}")
        config[key] = value
        for c in cells:
            c[key] = value
    if cells:
        config["cells"] = cells
    return config


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt(args, out: str | None) -> str:
    if args.format:
        return args.format
    return "json" if out and out.endswith(".json") else "csv"


def _run_table(args, estimate_only: bool, single: bool) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    rows = sweep(config, workers=args.workers, estimate_only=estimate_only)
    text = rows_to_json(rows) if _fmt(args, args.out) == "json" else rows_to_csv(rows)
    _emit(text, args.out)
    if single:
        for row in rows:
            if row["error"]:
                print(f"error: {row['error']}", file=sys.stderr)
                return EXIT_CONFIG
    return EXIT_OK


def _run_verify(args) -> int:
    from . import verify

    numbers = set(args.criteria) if args.criteria else None
    known = {num for num, *_ in verify.CRITERIA}
    if numbers and not numbers <= known:
        raise ConfigError(f"unknown criteria {sorted(numbers - known)}")
    results = verify.run_all(numbers, echo=lambda line: print(line, flush=True))
    if args.out:
        recs = [
            {"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail, "seconds": r.seconds}
            for r in results
        ]
        if _fmt(args, args.out) == "json":
            text = json.dumps(recs, indent=2)
        else:
            import csv
            import io

            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(recs[0]) if recs else ["number"], lineterminator="\n")
            w.writeheader()
            w.writerows(recs)
            text = buf.getvalue()
        _emit(text, args.out)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochsched", description="Truthful scheduling of stochastic tasks: experiments and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON config (a cell, or a grid/cells sweep)")
        sp.add_argument("--seed", type=int, help="override the seed of every cell")
        sp.add_argument("--trials", type=int, help="override the trial count of every cell")
        sp.add_argument("--out", help="write results here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), help="output format (default: from --out suffix, else csv)")
        sp.add_argument("--workers", type=int, default=1, help="parallel worker processes for cells")

    common(sub.add_parser("estimate", help="expected mechanism makespan for one cell"))
    common(sub.add_parser("ratio", help="approximation ratio and bound checks for one cell"))
    common(sub.add_parser("sweep", help="run a grid of cells; per-cell errors go to the error column"))
    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--criteria", type=int, nargs="+", help="only these criterion numbers")
    v.add_argument("--out", help="also write the results to this file")
    v.add_argument("--format", choices=("csv", "json"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _run_verify(args)
        return _run_table(args, estimate_only=args.command == "estimate", single=args.command != "sweep")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
