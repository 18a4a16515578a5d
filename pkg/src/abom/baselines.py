"""Classical comparators: random search, DE/rand/1/bin and inertia-weight PSO.

All three share the evaluation budget and ``RunResult`` contract of the ABOM
loop so the harness can treat every algorithm the same way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, OptimizerConfig
from .evolution import Evaluator, Objective, RunResult, clamp_to_bounds, run_abom
from .numerics import RngStream

ALGORITHMS = ("RS", "DE", "PSO")


@dataclass
class BaselineConfig:
    algorithm: str
    dim: int
    lower: np.ndarray | float = -100.0
    upper: np.ndarray | float = 100.0
    pop_size: int = 20
    budget: int = 20000
    seed: int = 0
    F: float = 0.5
    CR: float = 0.5
    c1: float = 2.0
    c2: float = 2.0
    w_start: float = 0.9
    w_end: float = 0.4
    vmax_frac: float = 0.2

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown baseline {self.algorithm!r}")
        self.lower = np.broadcast_to(np.asarray(self.lower, float), (self.dim,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, float), (self.dim,)).copy()
        if self.pop_size < 1 or self.budget < self.pop_size:
            raise ConfigError("need pop_size >= 1 and budget >= pop_size")
        if not np.all(self.lower < self.upper):
            raise ConfigError("lower bounds must be strictly below upper bounds")


def _result(name, rng, evaluate, generations, start):
    return RunResult(algorithm=name, seed=rng.seed, best_x=evaluate.best_x,
                     best_fitness=float(evaluate.best_f), trace=evaluate.trace(),
                     generations=generations, evaluations=evaluate.used,
                     elapsed=time.perf_counter() - start)


def run_random_search(objective: Objective, config: BaselineConfig,
                      rng: RngStream | None = None) -> RunResult:
    rng = rng or RngStream(config.seed)
    start = time.perf_counter()
    gen = rng.generator()
    evaluate = Evaluator(objective, config.budget)
    evaluate(gen.uniform(config.lower, config.upper, size=(config.budget, config.dim)))
    return _result("RS", rng, evaluate, 0, start)


def de_trial(pop: np.ndarray, i: int, F: float, CR: float, gen: np.random.Generator,
             lower, upper) -> np.ndarray:
    """One DE/rand/1/bin trial vector for individual ``i``."""
    n, d = pop.shape
    others = np.delete(np.arange(n), i)
    r1, r2, r3 = gen.choice(others, size=3, replace=False)
    mutant = pop[r1] + F * (pop[r2] - pop[r3])
    j_rand = gen.integers(d)
    cross = gen.random(d) < CR
    cross[j_rand] = True
    return clamp_to_bounds(np.where(cross, mutant, pop[i]), lower, upper)


def run_de(objective: Objective, config: BaselineConfig,
           rng: RngStream | None = None) -> RunResult:
    n = config.pop_size
    if n < 4:
        raise ConfigError("DE/rand/1 needs a population of at least 4")
    rng = rng or RngStream(config.seed)
    start = time.perf_counter()
    gen = rng.generator()
    evaluate = Evaluator(objective, config.budget)
    pop = gen.uniform(config.lower, config.upper, size=(n, config.dim))
    fit = evaluate(pop)
    generations = (config.budget - n) // n
    for _ in range(generations):
        trials = np.stack([de_trial(pop, i, config.F, config.CR, gen, config.lower, config.upper)
                           for i in range(n)])
        tfit = evaluate(trials)
        better = tfit <= fit
        pop[better], fit[better] = trials[better], tfit[better]
    return _result("DE", rng, evaluate, generations, start)


def inertia_weight(step: int, steps: int, w_start: float = 0.9, w_end: float = 0.4) -> float:
    """Linear schedule: ``w_start`` at step 0, ``w_end`` at step ``steps - 1``."""
    if steps <= 1:
        return w_start
    return w_start + (w_end - w_start) * step / (steps - 1)


def pso_update(x, v, pbest, gbest, w, c1, c2, r1, r2, vmax, lower, upper):
    """Velocity and position update; returns ``(x, v)``."""
    v = w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)
    v = np.clip(v, -vmax, vmax)
    return clamp_to_bounds(x + v, lower, upper), v


def run_pso(objective: Objective, config: BaselineConfig,
            rng: RngStream | None = None) -> RunResult:
    rng = rng or RngStream(config.seed)
    start = time.perf_counter()
    gen = rng.generator()
    n, d = config.pop_size, config.dim
    vmax = config.vmax_frac * (config.upper - config.lower)
    evaluate = Evaluator(objective, config.budget)
    x = gen.uniform(config.lower, config.upper, size=(n, d))
    v = gen.uniform(-vmax, vmax, size=(n, d))
    fit = evaluate(x)
    pbest, pfit = x.copy(), fit.copy()
    generations = (config.budget - n) // n
    for t in range(generations):
        w = inertia_weight(t, generations, config.w_start, config.w_end)
        gbest = pbest[np.argmin(pfit)]
        r1, r2 = gen.random((n, d)), gen.random((n, d))
        x, v = pso_update(x, v, pbest, gbest, w, config.c1, config.c2, r1, r2,
                          vmax, config.lower, config.upper)
        fit = evaluate(x)
        better = fit < pfit
        pbest[better], pfit[better] = x[better], fit[better]
    return _result("PSO", rng, evaluate, generations, start)


ABLATIONS = {
    "no_crossover": "ABOM-NC",
    "no_mutation": "ABOM-NM",
    "no_adaptation": "ABOM-NPA",
}


def run_ablation(objective: Objective, config: OptimizerConfig,
                 rng: RngStream | None = None, **flags: bool) -> RunResult:
    """Run ABOM with ablation flags switched on.

    Flags may be passed as keywords or already set on ``config``.
    """
    unknown = set(flags) - set(ABLATIONS)
    if unknown:
        raise ConfigError(f"unknown ablation flags {sorted(unknown)}")
    cfg = replace(config, **flags) if flags else config
    name = "+".join(ABLATIONS[k] for k in ABLATIONS if getattr(cfg, k)) or "ABOM"
    return run_abom(objective, cfg, rng, algorithm=name)


RUNNERS = {"RS": run_random_search, "DE": run_de, "PSO": run_pso}
