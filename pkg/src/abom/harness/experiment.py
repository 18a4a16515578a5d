"""Seeded experiment grids over (problem x algorithm x run)."""

from __future__ import annotations

import json
import logging
import os
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..baselines import ABLATIONS, RUNNERS, BaselineConfig
from ..benchmarks import (FUNCTION_IDS, BenchmarkFunction, UavScenario,
                          default_uav_scenario)
from ..config import OptimizerConfig
from ..evolution import RunResult, run_abom
from ..numerics import RngStream

logger = logging.getLogger(__name__)

OUTPUT_ENV = "ABOM_OUTPUT_DIR"
ABOM_VARIANTS = {"ABOM": {}, **{name: {flag: True} for flag, name in ABLATIONS.items()}}
ALGORITHM_IDS = tuple(ABOM_VARIANTS) + tuple(RUNNERS)
DEFAULT_BUDGET = {"function": 20000, "uav": 2500}


class ExperimentError(ValueError):
    pass


@dataclass
class ProblemSpec:
    function: str | None = None
    dim: int | None = None
    uav: str | None = None
    budget: int | None = None

    @property
    def id(self) -> str:
        if self.uav is not None:
            return f"uav-{Path(self.uav).stem if self.uav != 'default' else 'default'}"
        return f"{self.function}-d{self.dim}"

    def resolve(self, base_dir: Path | None = None):
        """Return ``(objective, lower, upper, dim, budget)``."""
        if self.uav is not None:
            if self.uav == "default":
                scen = default_uav_scenario()
            else:
                p = Path(self.uav)
                if not p.is_absolute() and base_dir is not None:
                    p = base_dir / p
                if not p.exists():
                    raise ExperimentError(f"UAV scenario not found: {p}")
                scen = UavScenario.load(p)
            lo, hi = scen.bounds()
            return scen, lo, hi, scen.dim, self.budget or DEFAULT_BUDGET["uav"]
        if self.function not in FUNCTION_IDS:
            raise ExperimentError(f"unknown function {self.function!r}")
        if not self.dim or self.dim < 1:
            raise ExperimentError(f"{self.function} needs a positive dimension")
        fn = BenchmarkFunction(self.function, self.dim)
        return fn, fn.lower, fn.upper, self.dim, self.budget or DEFAULT_BUDGET["function"]


@dataclass
class AlgorithmSpec:
    id: str
    params: dict[str, Any] = field(default_factory=dict)
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.id


@dataclass
class ExperimentConfig:
    problems: list[ProblemSpec]
    algorithms: list[AlgorithmSpec]
    runs: int = 30
    base_seed: int = 0
    output_dir: str = "results"
    pop_size: int = 20
    base_dir: Path | None = None

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        probs = [ProblemSpec(**p) for p in doc.get("problems", [])]
        algos = [AlgorithmSpec(**a) if isinstance(a, dict) else AlgorithmSpec(a)
                 for a in doc.get("algorithms", [])]
        return cls(problems=probs, algorithms=algos, runs=int(doc.get("runs", 30)),
                   base_seed=int(doc.get("base_seed", 0)),
                   output_dir=doc.get("output_dir", "results"),
                   pop_size=int(doc.get("pop_size", 20)), base_dir=base_dir)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def output_path(self) -> Path:
        env = os.environ.get(OUTPUT_ENV)
        if env:
            return Path(env)
        p = Path(self.output_dir)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def validate(self) -> None:
        if self.runs < 1:
            raise ExperimentError("runs must be >= 1")
        if not self.problems:
            raise ExperimentError("no problems configured")
        if not self.algorithms:
            raise ExperimentError("no algorithms configured")
        for a in self.algorithms:
            if a.id not in ALGORITHM_IDS:
                raise ExperimentError(f"unknown algorithm {a.id!r}; choose from {ALGORITHM_IDS}")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ExperimentError("algorithm names must be unique (use 'label')")
        for p in self.problems:
            p.resolve(self.base_dir)


@dataclass
class RunRecord:
    problem: str
    algorithm: str
    run: int
    seed: int
    budget: int
    evaluations: int
    generations: int
    best_fitness: float
    best_x: np.ndarray
    trace: np.ndarray
    loss_trace: np.ndarray
    elapsed: float = field(default=0.0, compare=False)

    @property
    def key(self) -> str:
        return f"{self.problem}__{self.algorithm}__{self.run:03d}"

    def to_json(self) -> str:
        """Deterministic serialisation; wall-clock time is kept out."""
        doc = {
            "problem": self.problem, "algorithm": self.algorithm, "run": self.run,
            "seed": self.seed, "budget": self.budget, "evaluations": self.evaluations,
            "generations": self.generations, "best_fitness": self.best_fitness,
            "best_x": self.best_x.tolist(), "trace": self.trace.tolist(),
            "loss_trace": self.loss_trace.tolist(),
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, elapsed: float = 0.0) -> "RunRecord":
        d = json.loads(text)
        return cls(problem=d["problem"], algorithm=d["algorithm"], run=d["run"],
                   seed=d["seed"], budget=d["budget"], evaluations=d["evaluations"],
                   generations=d["generations"], best_fitness=d["best_fitness"],
                   best_x=np.asarray(d["best_x"], float), trace=np.asarray(d["trace"], float),
                   loss_trace=np.asarray(d["loss_trace"], float), elapsed=elapsed)

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return self.to_json() == other.to_json()


def run_seed(base_seed: int, problem: str, algorithm: str, run: int) -> int:
    return base_seed + zlib.crc32(f"{problem}|{algorithm}|{run}".encode())


def execute_run(problem: ProblemSpec, algo: AlgorithmSpec, run: int, seed: int,
                pop_size: int = 20, base_dir: Path | None = None) -> RunRecord:
    """One (problem, algorithm, run) cell."""
    objective, lo, hi, dim, budget = problem.resolve(base_dir)
    params = dict(algo.params)
    params.setdefault("pop_size", pop_size)
    rng = RngStream(seed)
    if algo.id in ABOM_VARIANTS:
        cfg = OptimizerConfig(dim=dim, lower=lo, upper=hi, budget=budget, seed=seed,
                              **{**params, **ABOM_VARIANTS[algo.id]})
        res: RunResult = run_abom(objective, cfg, rng, algorithm=algo.name)
    else:
        cfg = BaselineConfig(algo.id, dim=dim, lower=lo, upper=hi, budget=budget,
                             seed=seed, **params)
        res = RUNNERS[algo.id](objective, cfg, rng)
    return RunRecord(problem=problem.id, algorithm=algo.name, run=run, seed=seed,
                     budget=budget, evaluations=res.evaluations,
                     generations=res.generations, best_fitness=res.best_fitness,
                     best_x=res.best_x, trace=res.trace, loss_trace=res.loss_trace,
                     elapsed=res.elapsed)


class RecordStore:
    """One JSON file per run under ``<root>/records``; timings go to a side file.

    Only the owning process writes, so appends need no locking.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.dir = self.root / "records"

    def path(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def has(self, key: str) -> bool:
        return self.path(key).exists()

    def write(self, rec: RunRecord) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        tmp = self.path(rec.key).with_suffix(".tmp")
        tmp.write_text(rec.to_json())
        tmp.replace(self.path(rec.key))
        with open(self.root / "timings.csv", "a") as fh:
            fh.write(f"{rec.key},{rec.elapsed:.6f}\n")

    def read(self, key: str) -> RunRecord:
        return RunRecord.from_json(self.path(key).read_text())

    def load_all(self) -> list[RunRecord]:
        if not self.dir.is_dir():
            raise FileNotFoundError(f"no records directory under {self.root}")
        recs = [RunRecord.from_json(p.read_text()) for p in sorted(self.dir.glob("*.json"))]
        return sorted(recs, key=lambda r: (r.problem, r.algorithm, r.run))


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   store: RecordStore | None = None) -> list[RunRecord]:
    """Run every cell of the grid, skipping cells already on disk."""
    config.validate()
    store = store or RecordStore(config.output_path())
    jobs, records = [], {}
    for prob in config.problems:
        for algo in config.algorithms:
            for r in range(config.runs):
                key = f"{prob.id}__{algo.name}__{r:03d}"
                if store.has(key):
                    records[key] = store.read(key)
                else:
                    seed = run_seed(config.base_seed, prob.id, algo.name, r)
                    jobs.append((prob, algo, r, seed, config.pop_size, config.base_dir))
    logger.info("%d runs to execute, %d resumed", len(jobs), len(records))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(execute_run, *job) for job in jobs]
            for fut in as_completed(futures):
                rec = fut.result()
                store.write(rec)
                records[rec.key] = rec
    else:
        for job in jobs:
            rec = execute_run(*job)
            store.write(rec)
            records[rec.key] = rec
    return sorted(records.values(), key=lambda r: (r.problem, r.algorithm, r.run))
