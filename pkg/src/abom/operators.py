"""Attention-parameterised selection, crossover and mutation.

One reproduction pass maps a population and its fitness to offspring::

    A   = softmax_rows((P~ Wqp)(P~ Wkp)^T + (F~ Wqf)(F~ Wkf)^T) / sqrt(d_A))
    P'  = P + W2 (mask_c * tanh(W1 (A P) + b1)) + b2
    M_i = softmax_rows((g~_i Wqm)(g~_i Wkm)^T / sqrt(d_A))
    P^_i = p'_i + W4 (mask_m * tanh(W3 (M_i p'_i) + b3)) + b4

``P~``/``F~`` are z-scored copies of the population columns and fitness, and
``g~_i`` is the z-scored gene column of ``p'_i``. Standardisation only feeds
the attention scores; every value path uses raw coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .numerics import (NumericsError, RngStream, check_finite, dropout_mask,
                       softmax_rows, softmax_rows_batched, standardize_columns)

THETA_FIELDS = ("W_QP", "W_KP", "W_QF", "W_KF", "W_QM", "W_KM",
                "W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")


@dataclass
class ThetaParams:
    W_QP: np.ndarray
    W_KP: np.ndarray
    W_QF: np.ndarray
    W_KF: np.ndarray
    W_QM: np.ndarray
    W_KM: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    W4: np.ndarray
    b4: np.ndarray

    @staticmethod
    def shapes(d: int, d_A: int, d_M: int) -> dict[str, tuple[int, ...]]:
        return {
            "W_QP": (d, d_A), "W_KP": (d, d_A),
            "W_QF": (1, d_A), "W_KF": (1, d_A),
            "W_QM": (1, d_A), "W_KM": (1, d_A),
            "W1": (d, d_M), "b1": (d_M,), "W2": (d_M, d), "b2": (d,),
            "W3": (d, d_M), "b3": (d_M,), "W4": (d_M, d), "b4": (d,),
        }

    @classmethod
    def zeros(cls, d: int, d_A: int, d_M: int) -> "ThetaParams":
        return cls(**{k: np.zeros(s) for k, s in cls.shapes(d, d_A, d_M).items()})

    @property
    def dims(self) -> tuple[int, int, int]:
        d, d_A = self.W_QP.shape
        return d, d_A, self.W1.shape[1]

    def items(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    def copy(self) -> "ThetaParams":
        return ThetaParams(**{k: v.copy() for k, v in self.items()})

    def zeros_like(self) -> "ThetaParams":
        return ThetaParams(**{k: np.zeros_like(v) for k, v in self.items()})

    def validate(self) -> None:
        expected = self.shapes(*self.dims)
        for k, v in self.items():
            if v.shape != expected[k]:
                raise NumericsError(f"{k} has shape {v.shape}, expected {expected[k]}")
            check_finite(v, k)


# gradients share the parameter layout
ThetaGradients = ThetaParams


@dataclass
class ForwardTrace:
    """Every intermediate of one reproduction pass.

    Masks are stored so the backward pass reuses them rather than resampling.
    """

    pop: np.ndarray
    fit: np.ndarray
    d_A: int
    raw_attention_inputs: bool
    no_crossover: bool
    no_mutation: bool
    # selection
    pop_std: np.ndarray
    fit_std: np.ndarray
    sel_scores: np.ndarray
    A: np.ndarray
    # crossover
    pool: np.ndarray
    c_pre: np.ndarray
    c_hidden: np.ndarray
    c_mask: np.ndarray
    pop_prime: np.ndarray
    # mutation
    gene_std: np.ndarray
    gene_sd: np.ndarray
    M: np.ndarray
    m_input: np.ndarray
    m_pre: np.ndarray
    m_hidden: np.ndarray
    m_mask: np.ndarray
    offspring: np.ndarray


def _standardize_fitness(fit: np.ndarray) -> np.ndarray:
    return standardize_columns(fit.reshape(-1, 1))


def _attention_inputs(pop, fit, raw: bool):
    if raw:
        return pop.copy(), fit.reshape(-1, 1).copy()
    return standardize_columns(pop), _standardize_fitness(fit)


def _selection(pop_std, fit_std, theta: ThetaParams, d_A: int):
    scale = 1.0 / np.sqrt(d_A)
    qp = pop_std @ theta.W_QP
    kp = pop_std @ theta.W_KP
    qf = fit_std @ theta.W_QF
    kf = fit_std @ theta.W_KF
    scores = (qp @ kp.T + qf @ kf.T) * scale
    return scores, softmax_rows(scores)


def selection_matrix(pop, fit, theta: ThetaParams, d_A: int,
                     raw_attention_inputs: bool = False) -> np.ndarray:
    """Row-stochastic N x N matrix weighting parents for recombination."""
    pop = np.asarray(pop, dtype=float)
    fit = np.asarray(fit, dtype=float).reshape(-1)
    if pop.ndim != 2 or fit.shape[0] != pop.shape[0]:
        raise NumericsError("population and fitness sizes disagree")
    if pop.shape[1] != theta.W_QP.shape[0]:
        raise NumericsError("population dimension does not match theta")
    check_finite(fit, "fitness")
    pop_std, fit_std = _attention_inputs(pop, fit, raw_attention_inputs)
    return _selection(pop_std, fit_std, theta, d_A)[1]


def _mlp(z, W_in, b_in, W_out, b_out, mask):
    pre = z @ W_in + b_in
    hidden = np.tanh(pre)
    return (mask * hidden) @ W_out + b_out, pre, hidden


def dropout_scale(rate: float, scaling: str) -> float:
    """Multiplier applied to kept hidden units: 1, or 1/(1 - rate) if inverted."""
    if scaling == "none" or rate >= 1.0:
        return 1.0
    if scaling == "inverted":
        return 1.0 / (1.0 - rate)
    raise NumericsError(f"unknown dropout scaling {scaling!r}")


def _draw_mask(rng, rows: int, width: int, rate: float, scaling: str = "none") -> np.ndarray:
    if isinstance(rng, RngStream):
        rng = rng.generator()
    return dropout_mask(width, rate, rng, rows=rows) * dropout_scale(rate, scaling)


def crossover(pop, a, theta: ThetaParams, p_C: float, rng=None, mask=None,
              dropout_scaling: str = "none"):
    """P' = P + MLP(A P) with one dropout mask per individual.

    Returns ``(P', fragment)`` where ``fragment`` holds the pool, hidden
    pre-activations, activations and the mask used. A supplied ``mask`` is
    used as-is, including any scaling already folded into it.
    """
    pop = np.asarray(pop, dtype=float)
    a = np.asarray(a, dtype=float)
    n = pop.shape[0]
    if a.shape != (n, n):
        raise NumericsError(f"selection matrix must be {n}x{n}, got {a.shape}")
    d_M = theta.W1.shape[1]
    if mask is None:
        mask = _draw_mask(rng, n, d_M, p_C, dropout_scaling)
    pool = a @ pop
    out, pre, hidden = _mlp(pool, theta.W1, theta.b1, theta.W2, theta.b2, mask)
    frag = {"pool": pool, "c_pre": pre, "c_hidden": hidden, "c_mask": mask}
    return pop + out, frag


def _standardize_genes(g: np.ndarray, raw: bool):
    """Z-score each row of ``g`` across its genes. Returns (g~, sd)."""
    if raw:
        return g.copy(), np.ones(g.shape[0])
    mu = g.mean(axis=1, keepdims=True)
    sd = g.std(axis=1)
    out = np.zeros_like(g)
    ok = sd > 0
    out[ok] = (g[ok] - mu[ok]) / sd[ok, None]
    return out, sd


def _mutation_matrices(gene_std: np.ndarray, theta: ThetaParams, d_A: int) -> np.ndarray:
    # (N, d, d_A) query/key stacks; scores via batched matmul
    q = gene_std[:, :, None] * (theta.W_QM[0] / np.sqrt(d_A))[None, None, :]
    k = gene_std[:, :, None] * theta.W_KM[0][None, None, :]
    return softmax_rows_batched(q @ np.swapaxes(k, 1, 2), inplace=True)


def mutation_matrix(ind, theta: ThetaParams, d_A: int,
                    raw_attention_inputs: bool = False) -> np.ndarray:
    """Row-stochastic d x d gene-interaction matrix for one individual."""
    g = np.asarray(ind, dtype=float).reshape(1, -1)
    if g.shape[1] != theta.W3.shape[0]:
        raise NumericsError("individual dimension does not match theta")
    gene_std, _ = _standardize_genes(g, raw_attention_inputs)
    return _mutation_matrices(gene_std, theta, d_A)[0]


def mutate(pop_prime, theta: ThetaParams, p_M: float, d_A: int, rng=None,
           mask=None, raw_attention_inputs: bool = False, dropout_scaling: str = "none"):
    """p^_i = p'_i + MLP(M_i p'_i) for every row; returns ``(P^, fragment)``."""
    pp = np.asarray(pop_prime, dtype=float)
    n, d = pp.shape
    if d != theta.W3.shape[0]:
        raise NumericsError("population dimension does not match theta")
    if mask is None:
        mask = _draw_mask(rng, n, theta.W3.shape[1], p_M, dropout_scaling)
    gene_std, gene_sd = _standardize_genes(pp, raw_attention_inputs)
    M = _mutation_matrices(gene_std, theta, d_A)
    m_input = np.einsum("njk,nk->nj", M, pp)
    out, pre, hidden = _mlp(m_input, theta.W3, theta.b3, theta.W4, theta.b4, mask)
    frag = {"gene_std": gene_std, "gene_sd": gene_sd, "M": M, "m_input": m_input,
            "m_pre": pre, "m_hidden": hidden, "m_mask": mask}
    return pp + out, frag


def reproduce(pop, fit, theta: ThetaParams, config, rng=None, masks=None):
    """Selection, crossover and mutation in sequence.

    ``config`` needs ``d_A``, ``p_C``, ``p_M`` and optionally
    ``dropout_scaling`` and the flags ``no_crossover``, ``no_mutation`` and
    ``raw_attention_inputs``. ``masks`` may be a ``(crossover_mask,
    mutation_mask)`` pair to replay a pass; they are used unscaled.
    Returns ``(offspring, ForwardTrace)``.
    """
    pop = np.asarray(pop, dtype=float)
    fit = np.asarray(fit, dtype=float).reshape(-1)
    n, d = pop.shape
    if fit.shape[0] != n:
        raise NumericsError(f"fitness has {fit.shape[0]} entries for {n} individuals")
    check_finite(pop, "population")
    check_finite(fit, "fitness")
    d_A = config.d_A
    raw = getattr(config, "raw_attention_inputs", False)
    no_c = getattr(config, "no_crossover", False)
    no_m = getattr(config, "no_mutation", False)
    scaling = getattr(config, "dropout_scaling", "none")
    d_M = theta.W1.shape[1]

    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if masks is None:
        c_mask = _draw_mask(gen, n, d_M, config.p_C, scaling)
        m_mask = _draw_mask(gen, n, d_M, config.p_M, scaling)
    else:
        c_mask, m_mask = (np.asarray(m, dtype=float) for m in masks)

    pop_std, fit_std = _attention_inputs(pop, fit, raw)
    scores, A = _selection(pop_std, fit_std, theta, d_A)
    if no_c:
        pop_prime = pop.copy()
        cfrag = {"pool": A @ pop, "c_pre": np.zeros((n, d_M)),
                 "c_hidden": np.zeros((n, d_M)), "c_mask": c_mask}
    else:
        pop_prime, cfrag = crossover(pop, A, theta, config.p_C, mask=c_mask)

    if no_m:
        offspring = pop_prime.copy()
        mfrag = {"gene_std": np.zeros((n, d)), "gene_sd": np.zeros(n),
                 "M": np.zeros((n, d, d)), "m_input": np.zeros((n, d)),
                 "m_pre": np.zeros((n, d_M)), "m_hidden": np.zeros((n, d_M)),
                 "m_mask": m_mask}
    else:
        offspring, mfrag = mutate(pop_prime, theta, config.p_M, d_A, mask=m_mask,
                                  raw_attention_inputs=raw)

    trace = ForwardTrace(pop=pop, fit=fit, d_A=d_A, raw_attention_inputs=raw,
                         no_crossover=no_c, no_mutation=no_m,
                         pop_std=pop_std, fit_std=fit_std, sel_scores=scores, A=A,
                         pop_prime=pop_prime, offspring=offspring, **cfrag, **mfrag)
    return offspring, trace
