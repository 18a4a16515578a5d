"""Synthetic test functions and a light UAV path-planning objective.

Functions take their textbook (unrotated, unshifted) form over the default
box [-100, 100]^d. Schwefel is evaluated on ``5 x`` so its optimum lies
inside the box; Griewank-Rosenbrock uses ``max(1, sqrt(d)/8) x + 1`` so its
optimum sits at the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np


class UnknownBenchmark(KeyError):
    pass


def sphere(x):
    return float(np.sum(x * x))


def ellipsoidal(x):
    d = x.size
    w = 10.0 ** (6.0 * np.arange(d) / (d - 1)) if d > 1 else np.ones(1)
    return float(np.sum(w * x * x))


def rastrigin(x):
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))


def bent_cigar(x):
    return float(x[0] ** 2 + 1e6 * np.sum(x[1:] ** 2))


def discus(x):
    return float(1e6 * x[0] ** 2 + np.sum(x[1:] ** 2))


def sharp_ridge(x):
    return float(x[0] ** 2 + 100.0 * math.sqrt(float(np.sum(x[1:] ** 2))))


def different_powers(x):
    d = x.size
    e = 2.0 + 4.0 * np.arange(d) / (d - 1) if d > 1 else np.full(1, 2.0)
    return float(math.sqrt(float(np.sum(np.abs(x) ** e))))


SCHWEFEL_ARGMIN = 420.968746
_SCHWEFEL_CONST = 418.9828872724339


def schwefel(x):
    z = 5.0 * x
    return float(_SCHWEFEL_CONST * x.size - np.sum(z * np.sin(np.sqrt(np.abs(z)))))


def griewank_rosenbrock(x):
    d = x.size
    if d < 2:
        raise ValueError("griewank_rosenbrock needs d >= 2")
    z = max(1.0, math.sqrt(d) / 8.0) * x + 1.0
    s = 100.0 * (z[:-1] ** 2 - z[1:]) ** 2 + (z[:-1] - 1.0) ** 2
    return float(10.0 / (d - 1) * np.sum(s / 4000.0 - np.cos(s)) + 10.0)


_FUNCTIONS: dict[str, tuple[Callable, Callable[[int], np.ndarray]]] = {
    "sphere": (sphere, np.zeros),
    "ellipsoidal": (ellipsoidal, np.zeros),
    "rastrigin": (rastrigin, np.zeros),
    "rosenbrock": (rosenbrock, np.ones),
    "bent_cigar": (bent_cigar, np.zeros),
    "discus": (discus, np.zeros),
    "sharp_ridge": (sharp_ridge, np.zeros),
    "different_powers": (different_powers, np.zeros),
    "schwefel": (schwefel, lambda d: np.full(d, SCHWEFEL_ARGMIN / 5.0)),
    "griewank_rosenbrock": (griewank_rosenbrock, np.zeros),
}

FUNCTION_IDS = tuple(_FUNCTIONS)


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    dim: int
    lower: float = -100.0
    upper: float = 100.0

    def __post_init__(self):
        if self.name not in _FUNCTIONS:
            raise UnknownBenchmark(self.name)
        if self.dim < 1 or (self.name == "griewank_rosenbrock" and self.dim < 2):
            raise ValueError(f"invalid dimension {self.dim} for {self.name}")

    @property
    def optimum_location(self) -> np.ndarray:
        return _FUNCTIONS[self.name][1](self.dim)

    @property
    def optimum_value(self) -> float:
        return 0.0

    def __call__(self, x) -> float:
        return evaluate(self, x)


def evaluate(fn: BenchmarkFunction | str, x, dim: int | None = None) -> float:
    """Evaluate a named benchmark at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(fn, str):
        fn = BenchmarkFunction(fn, x.size if dim is None else dim)
    if x.size != fn.dim:
        raise ValueError(f"{fn.name} expects {fn.dim} values, got {x.size}")
    return _FUNCTIONS[fn.name][0](x)


# --- UAV-lite ---------------------------------------------------------------

@dataclass
class Cylinder:
    x: float
    y: float
    radius: float
    height: float


@dataclass
class UavScenario:
    """Start/goal points, K waypoints to optimise and cylindrical threats."""

    start: tuple[float, float, float]
    goal: tuple[float, float, float]
    n_nodes: int
    threats: list[Cylinder] = field(default_factory=list)
    penalty: float = 100.0
    lower: tuple[float, float, float] = (0.0, 0.0, 0.0)
    upper: tuple[float, float, float] = (200.0, 200.0, 50.0)
    samples_per_segment: int = 32

    def __post_init__(self):
        self.start = tuple(float(v) for v in self.start)
        self.goal = tuple(float(v) for v in self.goal)
        self.lower = tuple(float(v) for v in self.lower)
        self.upper = tuple(float(v) for v in self.upper)
        self.threats = [c if isinstance(c, Cylinder) else Cylinder(**c) for c in self.threats]
        if self.n_nodes < 1:
            raise ValueError("a scenario needs at least one node")
        if self.samples_per_segment < 32:
            raise ValueError("need >= 32 samples per segment")
        for c in self.threats:
            if c.radius <= 0 or c.height <= 0:
                raise ValueError("cylinder radius and height must be positive")
            for p in (self.start, self.goal):
                if math.hypot(p[0] - c.x, p[1] - c.y) < c.radius and 0.0 <= p[2] <= c.height:
                    raise ValueError("start and goal must lie outside every threat")

    @property
    def dim(self) -> int:
        return 3 * self.n_nodes

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.tile(self.lower, self.n_nodes), np.tile(self.upper, self.n_nodes)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "UavScenario":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "UavScenario":
        return cls.from_json(Path(path).read_text())

    def __call__(self, nodes) -> float:
        return uav_path_cost(self, nodes)


def default_uav_scenario(seed: int = 7, n_threats: int = 5) -> UavScenario:
    """200 x 200 x 50 m box, 10 waypoints, seeded cylinders."""
    rng = np.random.default_rng(seed)
    start, goal = (10.0, 10.0, 10.0), (190.0, 190.0, 10.0)
    threats = []
    while len(threats) < n_threats:
        x, y = rng.uniform(40.0, 160.0, size=2)
        r = rng.uniform(10.0, 25.0)
        h = rng.uniform(30.0, 50.0)
        if all(math.hypot(p[0] - x, p[1] - y) > r for p in (start, goal)):
            threats.append(Cylinder(round(float(x), 3), round(float(y), 3),
                                    round(float(r), 3), round(float(h), 3)))
    return UavScenario(start=start, goal=goal, n_nodes=10, threats=threats)


def uav_path_cost(scenario: UavScenario, nodes) -> float:
    """Polyline length plus length-weighted threat and ground penetration.

    Each segment is sampled at the midpoints of ``samples_per_segment`` equal
    pieces; a zero-length segment therefore adds nothing.
    """
    v = np.asarray(nodes, dtype=float).reshape(-1)
    if v.size != 3 * scenario.n_nodes:
        raise ValueError(f"expected {3 * scenario.n_nodes} values, got {v.size}")
    pts = np.vstack([scenario.start, v.reshape(-1, 3), scenario.goal])
    seg = np.diff(pts, axis=0)
    seg_len = np.sqrt(np.sum(seg * seg, axis=1))
    length = float(np.sum(seg_len))

    k = scenario.samples_per_segment
    t = (np.arange(k) + 0.5) / k
    samples = pts[:-1, None, :] + t[None, :, None] * seg[:, None, :]  # (S, k, 3)
    depth = np.maximum(0.0, -samples[..., 2])
    for c in scenario.threats:
        r = np.hypot(samples[..., 0] - c.x, samples[..., 1] - c.y)
        inside = (samples[..., 2] >= 0.0) & (samples[..., 2] <= c.height)
        depth = depth + np.where(inside, np.maximum(0.0, c.radius - r), 0.0)
    violation = float(np.sum(depth.sum(axis=1) * seg_len / k))
    return length + scenario.penalty * violation
