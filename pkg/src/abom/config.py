"""Run configuration shared by the ABOM loop, its operators and the baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOSS_PAIRINGS = ("generation", "sorted")
DROPOUT_SCALINGS = ("inverted", "none")


class ConfigError(ValueError):
    pass


def default_hidden_dim(d: int) -> int:
    """Largest power of two not exceeding ``d``."""
    return 2 ** int(math.floor(math.log2(d)))


@dataclass
class OptimizerConfig:
    """Settings for one ABOM run.

    ``d_A``/``d_M`` left as ``None`` resolve to ``d`` and ``2**floor(log2 d)``.
    ``loss_pairing`` selects how offspring rows line up with elite rows in the
    adaptation loss: ``"generation"`` keeps generation order, ``"sorted"``
    sorts offspring by fitness first.
    """

    dim: int
    lower: np.ndarray | float = -100.0
    upper: np.ndarray | float = 100.0
    pop_size: int = 20
    budget: int = 20000
    d_A: int | None = None
    d_M: int | None = None
    p_C: float = 0.95
    p_M: float = 0.95
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    seed: int = 0
    no_crossover: bool = False
    no_mutation: bool = False
    no_adaptation: bool = False
    loss_pairing: str = "generation"
    raw_attention_inputs: bool = False
    dropout_scaling: str = "inverted"
    record_theta: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        if self.d_A is None:
            self.d_A = self.dim
        if self.d_M is None:
            self.d_M = default_hidden_dim(self.dim)
        self.validate()

    def validate(self) -> None:
        if self.pop_size < 2:
            raise ConfigError("population size must be >= 2")
        if self.budget < self.pop_size:
            raise ConfigError("budget must be >= population size")
        for name in ("p_C", "p_M"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if not np.all(self.lower < self.upper):
            raise ConfigError("lower bounds must be strictly below upper bounds")
        if self.d_A < 1 or self.d_M < 1:
            raise ConfigError("d_A and d_M must be >= 1")
        if self.dropout_scaling not in DROPOUT_SCALINGS:
            raise ConfigError(f"dropout_scaling must be one of {DROPOUT_SCALINGS}")
        if self.loss_pairing not in LOSS_PAIRINGS:
            raise ConfigError(f"loss_pairing must be one of {LOSS_PAIRINGS}")
