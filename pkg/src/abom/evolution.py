"""The ABOM outer loop: initialise, reproduce, evaluate, keep elites, adapt."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .adaptation import (AdamWState, NonFiniteGradient, adamw_step,
                         adaptation_loss, backward, init_theta)
from .config import OptimizerConfig
from .numerics import NumericsError, RngStream, latin_hypercube
from .operators import ThetaParams, reproduce

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]

# sub-stream keys under a run's RngStream
STREAM_INIT, STREAM_THETA, STREAM_MASKS = 0, 1, 2


class ObjectiveError(RuntimeError):
    """The objective returned a NaN or infinite value."""


@dataclass
class RunResult:
    algorithm: str
    seed: int
    best_x: np.ndarray
    best_fitness: float
    trace: np.ndarray
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    generations: int = 0
    evaluations: int = 0
    elapsed: float = field(default=0.0, compare=False)
    initial_theta: ThetaParams | None = field(default=None, compare=False, repr=False)
    final_theta: ThetaParams | None = field(default=None, compare=False, repr=False)

    def __eq__(self, other):
        if not isinstance(other, RunResult):
            return NotImplemented
        return (self.algorithm == other.algorithm and self.seed == other.seed
                and self.best_fitness == other.best_fitness
                and self.generations == other.generations
                and self.evaluations == other.evaluations
                and np.array_equal(self.best_x, other.best_x)
                and np.array_equal(self.trace, other.trace)
                and np.array_equal(self.loss_trace, other.loss_trace))


class Evaluator:
    """Counts evaluations and keeps the best-so-far trace."""

    def __init__(self, objective: Objective, budget: int):
        self.objective = objective
        self.budget = budget
        self.values: list[float] = []
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf

    @property
    def used(self) -> int:
        return len(self.values)

    def __call__(self, pop: np.ndarray) -> np.ndarray:
        if self.used + len(pop) > self.budget:
            raise RuntimeError("evaluation budget exceeded")
        out = np.empty(len(pop))
        for i, x in enumerate(pop):
            f = float(self.objective(x))
            if not np.isfinite(f):
                raise ObjectiveError(f"objective returned {f} at evaluation {self.used + 1}")
            out[i] = f
            self.values.append(f)
            if f < self.best_f:
                self.best_f, self.best_x = f, np.array(x, dtype=float)
        return out

    def trace(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.values, dtype=float))


def elitism_merge(pop, fit, offspring, off_fit, n: int):
    """Top ``n`` of parents and offspring, sorted ascending by fitness.

    Ties go to parents first, then to the lower original index. The union is
    a set: an offspring bit-identical to a parent is the same candidate and
    does not take a second slot.
    """
    pop, offspring = np.asarray(pop, float), np.asarray(offspring, float)
    fit, off_fit = np.asarray(fit, float).reshape(-1), np.asarray(off_fit, float).reshape(-1)
    if pop.shape != offspring.shape or pop.shape[0] != n or fit.size != n or off_fit.size != n:
        raise NumericsError("parents and offspring must both have n rows with matching fitness")
    parents = {row.tobytes() for row in pop}
    fresh = np.array([row.tobytes() not in parents for row in offspring], dtype=bool)
    union = np.vstack([pop, offspring[fresh]])
    ufit = np.concatenate([fit, off_fit[fresh]])
    order = np.argsort(ufit, kind="stable")[:n]
    return union[order], ufit[order]


def clamp_to_bounds(pop, lower, upper) -> np.ndarray:
    return np.clip(np.asarray(pop, dtype=float), lower, upper)


def _loss_target(elites, off_fit, pairing: str) -> np.ndarray:
    if pairing == "generation":
        return elites
    # best offspring pairs with best elite, and so on
    target = np.empty_like(elites)
    target[np.argsort(off_fit, kind="stable")] = elites
    return target


def run_abom(objective: Objective, config: OptimizerConfig,
             rng: RngStream | None = None, algorithm: str = "ABOM") -> RunResult:
    """Run ABOM until the next full generation would exceed the budget."""
    rng = rng or RngStream(config.seed)
    n, d = config.pop_size, config.dim
    generations = (config.budget - n) // n
    start = time.perf_counter()

    evaluate = Evaluator(objective, config.budget)
    pop = latin_hypercube(n, d, config.lower, config.upper, rng.child(STREAM_INIT))
    fit = evaluate(pop)
    order = np.argsort(fit, kind="stable")
    pop, fit = pop[order], fit[order]

    theta = init_theta(d, config.d_A, config.d_M, rng.child(STREAM_THETA))
    initial_theta = theta.copy() if config.record_theta else None
    state = AdamWState.for_theta(theta, lr=config.lr, beta1=config.beta1,
                                 beta2=config.beta2, eps=config.eps,
                                 weight_decay=config.weight_decay)
    losses = np.empty(generations)

    for t in range(generations):
        off, trace = reproduce(pop, fit, theta, config, rng.child(STREAM_MASKS, t))
        off = clamp_to_bounds(off, config.lower, config.upper)
        off_fit = evaluate(off)
        elites, elite_fit = elitism_merge(pop, fit, off, off_fit, n)
        target = _loss_target(elites, off_fit, config.loss_pairing)
        losses[t] = adaptation_loss(off, target)
        if not config.no_adaptation:
            grads = backward(trace, target, theta, evaluated=off)
            try:
                theta, state = adamw_step(theta, grads, state)
            except NonFiniteGradient as exc:
                logger.warning("generation %d: update skipped (%s)", t, exc)
        pop, fit = elites, elite_fit

    return RunResult(
        algorithm=algorithm, seed=rng.seed, best_x=evaluate.best_x,
        best_fitness=float(evaluate.best_f), trace=evaluate.trace(),
        loss_trace=losses, generations=generations, evaluations=evaluate.used,
        elapsed=time.perf_counter() - start, initial_theta=initial_theta,
        final_theta=theta.copy() if config.record_theta else None,
    )
