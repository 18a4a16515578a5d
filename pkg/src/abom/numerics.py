"""Seedable numeric primitives shared by the optimizers.

Matrices are plain 2-D ``numpy.ndarray`` objects of ``float64``. The helpers
here add the shape and finiteness checks the rest of the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericsError(ValueError):
    """Raised on malformed numeric input (bad shapes, NaN/Inf, bad rates)."""


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream)``.

    ``child`` derives independent sub-streams, so a run can hand each
    (generation, operator) pair its own generator without sharing state.
    """

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1),
                                    spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise NumericsError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def check_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericsError(f"{name} contains non-finite values")
    return a


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax, stabilised by subtracting each row's maximum."""
    a = check_finite(_as_matrix(m), "softmax input")
    if a.shape[1] == 0:
        raise NumericsError("softmax over an empty row")
    e = np.exp(a - a.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_batched(s: np.ndarray, inplace: bool = False) -> np.ndarray:
    """Softmax over the last axis of a stack of matrices.

    ``inplace=True`` overwrites ``s`` to avoid temporaries on large stacks.
    """
    e = s if inplace else np.array(s, dtype=float)
    e -= e.max(axis=-1, keepdims=True)
    np.exp(e, out=e)
    e /= e.sum(axis=-1, keepdims=True)
    return e


def dropout_mask(dim: int, rate: float, rng: np.random.Generator | RngStream,
                 rows: int | None = None) -> np.ndarray:
    """Bernoulli keep-mask: each entry is 0 with probability ``rate``.

    No inverted-dropout rescaling is applied. With ``rows`` given, returns an
    independent mask per row with shape ``(rows, dim)``.
    """
    if not 0.0 <= rate <= 1.0:
        raise NumericsError(f"dropout rate must lie in [0, 1], got {rate}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    shape = (dim,) if rows is None else (rows, dim)
    return (gen.random(shape) >= rate).astype(float)


def latin_hypercube(n: int, d: int, lower, upper,
                    rng: np.random.Generator | RngStream) -> np.ndarray:
    """Sample ``n`` points in the box so each axis has one point per stratum."""
    if n < 1 or d < 1:
        raise NumericsError("latin_hypercube needs n >= 1 and d >= 1")
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    if not np.all(lo < hi):
        raise NumericsError("degenerate bounds: lower must be < upper")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    strata = np.stack([gen.permutation(n) for _ in range(d)], axis=1)
    unit = (strata + gen.random((n, d))) / n
    pts = lo + unit * (hi - lo)
    # guard against rounding onto the upper edge
    return np.minimum(pts, np.nextafter(hi, lo))


def matmul(a, b) -> np.ndarray:
    a, b = _as_matrix(a, "a"), _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise NumericsError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose(a) -> np.ndarray:
    return _as_matrix(a).T.copy()


def add(a, b) -> np.ndarray:
    a, b = _as_matrix(a, "a"), _as_matrix(b, "b")
    if a.shape != b.shape:
        raise NumericsError(f"shape mismatch {a.shape} vs {b.shape}")
    return a + b


def sub(a, b) -> np.ndarray:
    a, b = _as_matrix(a, "a"), _as_matrix(b, "b")
    if a.shape != b.shape:
        raise NumericsError(f"shape mismatch {a.shape} vs {b.shape}")
    return a - b


def scale(a, c: float) -> np.ndarray:
    return _as_matrix(a) * float(c)


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """Z-score each column; zero-variance columns map to 0."""
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x, dtype=float)
    ok = sd > 0
    out[:, ok] = (x[:, ok] - mu[ok]) / sd[ok]
    return out
