"""Command-line entry point: ``abom run|report|solve|gradcheck``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

from ..adaptation import gradcheck
from .experiment import (ALGORITHM_IDS, OUTPUT_ENV, AlgorithmSpec,
                         ExperimentConfig, ExperimentError, ProblemSpec,
                         RecordStore, execute_run, run_experiment)
from .report import ReportError, emit_report

log = logging.getLogger("abom")


def _output_dir(default: str | None) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or default or "results")


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.experiment)
    start = time.perf_counter()
    records = run_experiment(cfg, workers=args.workers)
    out = cfg.output_path()
    log.info("%d records in %.1fs", len(records), time.perf_counter() - start)
    if not args.no_report:
        paths = emit_report(records, out)
        for p in paths.values():
            print(p)
    return 0


def cmd_report(args) -> int:
    records = RecordStore(args.records_dir).load_all()
    paths = emit_report(records, args.out or args.records_dir)
    for p in paths.values():
        print(p)
    return 0


def cmd_solve(args) -> int:
    if args.problem == "uav":
        problem = ProblemSpec(uav=args.scenario or "default", budget=args.budget)
    else:
        problem = ProblemSpec(function=args.problem, dim=args.dim, budget=args.budget)
    params = {}
    if args.algo.startswith("ABOM"):
        if args.raw_attention_inputs:
            params["raw_attention_inputs"] = True
        if args.dropout_scaling:
            params["dropout_scaling"] = args.dropout_scaling
    rec = execute_run(problem, AlgorithmSpec(args.algo, params), 0, args.seed,
                      pop_size=args.pop_size)
    out = _output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{rec.problem}__{rec.algorithm}__seed{args.seed}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["evaluation", "best_fitness"])
        for i, v in enumerate(rec.trace, start=1):
            w.writerow([i, repr(float(v))])
    print(f"best_fitness {rec.best_fitness!r}")
    print(f"evaluations {rec.evaluations}")
    print(f"trace {path}")
    return 0


def cmd_gradcheck(args) -> int:
    start = time.perf_counter()
    res = gradcheck(instances=args.instances, seed=args.seed, tol=args.tol)
    for name, err in res.per_param.items():
        print(f"{name:5s} max_rel_error {err:.3e}")
    status = "PASS" if res.passed else "FAIL"
    print(f"{status} worst {res.worst_param} {res.max_rel_error:.3e} "
          f"(tol {res.tol:g}, {res.instances} instances, {time.perf_counter() - start:.2f}s)")
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abom", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment grid from a JSON file")
    p.add_argument("experiment")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-report", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="write traces/summary/curves from stored records")
    p.add_argument("records_dir")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("solve", help="single run; prints best fitness and writes its trace")
    p.add_argument("--algo", required=True, choices=ALGORITHM_IDS)
    p.add_argument("--problem", required=True, help="function id or 'uav'")
    p.add_argument("--dim", type=int, default=30)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pop-size", type=int, default=20)
    p.add_argument("--scenario", help="UAV scenario JSON (default: built-in)")
    p.add_argument("--raw-attention-inputs", action="store_true")
    p.add_argument("--dropout-scaling", choices=("inverted", "none"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gradcheck", help="finite-difference check of the adaptation gradients")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ExperimentError, ReportError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
