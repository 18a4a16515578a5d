"""Rank-sum significance testing and min-max normalisation of cost traces."""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple, Sequence

import numpy as np

EXACT_MAX_TOTAL = 16
ALPHA = 0.05
WORSE, SAME, BETTER = "-", "≈", "+"


class RankSumResult(NamedTuple):
    statistic: float
    pvalue: float
    method: str


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties replaced by the mean of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, n: int, w: float) -> float:
    sums = np.fromiter((sum(c) for c in itertools.combinations(ranks, n)), dtype=float)
    tol = 1e-9
    lo = np.mean(sums <= w + tol)
    hi = np.mean(sums >= w - tol)
    return float(min(1.0, 2.0 * min(lo, hi)))


def _normal_p(ranks: np.ndarray, n: int, m: int, u: float) -> float:
    total = n + m
    _, counts = np.unique(ranks, return_counts=True)
    ties = float(np.sum(counts ** 3 - counts))
    var = n * m / 12.0 * ((total + 1) - ties / (total * (total - 1)))
    if var <= 0:
        return 1.0
    z = max(0.0, abs(u - n * m / 2.0) - 0.5) / math.sqrt(var)
    return float(min(1.0, math.erfc(z / math.sqrt(2.0))))


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float],
                      method: str = "auto") -> RankSumResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

    The statistic is U for ``a``. ``method="auto"`` enumerates the exact
    permutation distribution of midrank sums when ``len(a) + len(b) <= 16``
    and otherwise uses the normal approximation with tie and continuity
    corrections.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    n, m = a.size, b.size
    if n < 2 or m < 2:
        raise ValueError("each sample needs at least two observations")
    ranks = midranks(np.concatenate([a, b]))
    w = float(ranks[:n].sum())
    u = w - n * (n + 1) / 2.0
    if method == "auto":
        method = "exact" if n + m <= EXACT_MAX_TOTAL else "approx"
    if method == "exact":
        return RankSumResult(u, _exact_p(ranks, n, w), "exact")
    if method == "approx":
        return RankSumResult(u, _normal_p(ranks, n, m, u), "approx")
    raise ValueError(f"unknown method {method!r}")


def significance_symbol(candidate: Sequence[float], reference: Sequence[float],
                        alpha: float = ALPHA) -> tuple[str, float]:
    """``+`` if ``candidate`` is significantly better (lower) than ``reference``,
    ``-`` if significantly worse, ``≈`` otherwise. Direction follows medians."""
    p = wilcoxon_rank_sum(candidate, reference).pvalue
    if p >= alpha:
        return SAME, p
    better = np.median(candidate) < np.median(reference)
    return (BETTER if better else WORSE), p


def pad_trace(trace: np.ndarray, length: int) -> np.ndarray:
    """Extend a best-so-far trace to ``length`` by repeating its last value."""
    if trace.size >= length:
        return trace[:length]
    return np.concatenate([trace, np.full(length - trace.size, trace[-1])])


def normalize_costs(records, problem: str | None = None) -> dict[str, np.ndarray]:
    """Min-max normalise best-so-far traces of one problem.

    The min and max are taken over every algorithm, run and evaluation of the
    problem; a degenerate range maps everything to 0. Shorter traces are
    padded with their final value. Returns ``{algorithm: runs x evals}``.
    """
    recs = [r for r in records if problem is None or r.problem == problem]
    if not recs:
        raise ValueError(f"no records for problem {problem!r}")
    length = max(r.trace.size for r in recs)
    lo = min(float(r.trace.min()) for r in recs)
    hi = max(float(r.trace.max()) for r in recs)
    span = hi - lo
    out: dict[str, list[np.ndarray]] = {}
    for r in recs:
        t = pad_trace(r.trace, length)
        norm = np.zeros_like(t) if span <= 0 else (t - lo) / span
        out.setdefault(r.algorithm, []).append(np.clip(norm, 0.0, 1.0))
    return {alg: np.vstack(v) for alg, v in out.items()}


def downsample_indices(length: int, max_points: int = 500) -> np.ndarray:
    if length <= max_points:
        return np.arange(length)
    return np.unique(np.round(np.linspace(0, length - 1, max_points)).astype(int))
