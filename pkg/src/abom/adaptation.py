"""Online parameter adaptation: elite-regression loss, its gradient, AdamW."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import NumericsError, RngStream
from .operators import ForwardTrace, ThetaGradients, ThetaParams, reproduce


def adaptation_loss(offspring, elites) -> float:
    """Squared Frobenius distance between offspring and the elite archive."""
    off = np.asarray(offspring, dtype=float)
    eli = np.asarray(elites, dtype=float)
    if off.shape != eli.shape:
        raise NumericsError(f"offspring {off.shape} and elites {eli.shape} differ in shape")
    r = off - eli
    return float(np.sum(r * r))


def _standardize_backward(d_std, x_std, sd):
    """Adjoint of row-wise z-scoring. Zero-variance rows pass no gradient."""
    n = d_std.shape[-1]
    out = np.zeros_like(d_std)
    ok = sd > 0
    if np.any(ok):
        g, z = d_std[ok], x_std[ok]
        out[ok] = (g - g.sum(axis=1, keepdims=True) / n
                   - z * (g * z).sum(axis=1, keepdims=True) / n) / sd[ok, None]
    return out


def _softmax_backward(dP, P):
    return P * (dP - np.sum(dP * P, axis=-1, keepdims=True))


def backward(trace: ForwardTrace, elites, theta: ThetaParams,
             evaluated=None) -> ThetaGradients:
    """Gradient of the adaptation loss with respect to every parameter.

    Elites and the parent population are constants. Dropout masks come from
    ``trace``. ``evaluated`` overrides the offspring used in the residual
    (e.g. the clamped rows that were actually evaluated); the gradient is then
    propagated through the unclamped graph.
    """
    off = trace.offspring if evaluated is None else np.asarray(evaluated, dtype=float)
    elites = np.asarray(elites, dtype=float)
    if off.shape != elites.shape:
        raise NumericsError(f"trace offspring {off.shape} vs elites {elites.shape}")
    grads = theta.zeros_like()
    dout = 2.0 * (off - elites)

    # mutation: p^ = p' + (m_mask * tanh(y W3 + b3)) W4 + b4, y_i = M_i p'_i
    if trace.no_mutation:
        dpp = dout
    else:
        mh = trace.m_mask * trace.m_hidden
        grads.b4 = dout.sum(axis=0)
        grads.W4 = mh.T @ dout
        dpre = (dout @ theta.W4.T) * trace.m_mask * (1.0 - trace.m_hidden ** 2)
        grads.W3 = trace.m_input.T @ dpre
        grads.b3 = dpre.sum(axis=0)
        dy = dpre @ theta.W3.T
        M = trace.M
        g = trace.pop_prime
        dpp = dout + np.einsum("njk,nj->nk", M, dy)
        dM = dy[:, :, None] * g[:, None, :]
        dS = _softmax_backward(dM, M)
        # scores are rank one: S_n = c * z_n z_n^T, c = (wq . wk) / sqrt(d_A)
        z = trace.gene_std
        inv = 1.0 / np.sqrt(trace.d_A)
        wq, wk = theta.W_QM[0], theta.W_KM[0]
        c = float(wq @ wk) * inv
        quad = np.einsum("nj,njk,nk->", z, dS, z)
        grads.W_QM = (quad * inv * wk)[None, :]
        grads.W_KM = (quad * inv * wq)[None, :]
        dz = c * np.einsum("njk,nk->nj", dS + np.swapaxes(dS, 1, 2), z)
        if trace.raw_attention_inputs:
            dpp = dpp + dz
        else:
            dpp = dpp + _standardize_backward(dz, z, trace.gene_sd)

    # crossover: p' = p + (c_mask * tanh(A P W1 + b1)) W2 + b2
    if not trace.no_crossover:
        ch = trace.c_mask * trace.c_hidden
        grads.b2 = dpp.sum(axis=0)
        grads.W2 = ch.T @ dpp
        dpre = (dpp @ theta.W2.T) * trace.c_mask * (1.0 - trace.c_hidden ** 2)
        grads.W1 = trace.pool.T @ dpre
        grads.b1 = dpre.sum(axis=0)
        dA = (dpre @ theta.W1.T) @ trace.pop.T
        dS = _softmax_backward(dA, trace.A) / np.sqrt(trace.d_A)
        P, F = trace.pop_std, trace.fit_std
        qp, kp = P @ theta.W_QP, P @ theta.W_KP
        qf, kf = F @ theta.W_QF, F @ theta.W_KF
        grads.W_QP = P.T @ (dS @ kp)
        grads.W_KP = P.T @ (dS.T @ qp)
        grads.W_QF = F.T @ (dS @ kf)
        grads.W_KF = F.T @ (dS.T @ qf)
    return grads


@dataclass
class AdamWState:
    m: ThetaParams
    v: ThetaParams
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    @classmethod
    def for_theta(cls, theta: ThetaParams, **kwargs) -> "AdamWState":
        return cls(m=theta.zeros_like(), v=theta.zeros_like(), **kwargs)


class NonFiniteGradient(FloatingPointError):
    pass


def adamw_step(theta: ThetaParams, grads: ThetaGradients, state: AdamWState):
    """Decoupled weight decay Adam step. Returns ``(new_theta, new_state)``.

    Raises ``NonFiniteGradient`` and leaves the inputs untouched if any
    gradient entry is NaN or infinite.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {name}")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_theta, new_m, new_v = {}, {}, {}
    for name, p in theta.items():
        g = getattr(grads, name)
        m = b1 * getattr(state.m, name) + (1.0 - b1) * g
        v = b2 * getattr(state.v, name) + (1.0 - b2) * g * g
        p = p * (1.0 - state.lr * state.weight_decay)
        new_theta[name] = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_m[name], new_v[name] = m, v
    new_state = AdamWState(m=ThetaParams(**new_m), v=ThetaParams(**new_v), step=t,
                           lr=state.lr, beta1=b1, beta2=b2, eps=state.eps,
                           weight_decay=state.weight_decay)
    return ThetaParams(**new_theta), new_state


def init_theta(d: int, d_A: int, d_M: int, rng) -> ThetaParams:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero."""
    if min(d, d_A, d_M) < 1:
        raise NumericsError("dimensions must be >= 1")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    params = {}
    for name, shape in ThetaParams.shapes(d, d_A, d_M).items():
        if name.startswith("b"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = gen.uniform(-bound, bound, size=shape)
    return ThetaParams(**params)


# --- finite-difference gradient check -------------------------------------

@dataclass
class _CheckSettings:
    d_A: int
    p_C: float
    p_M: float
    raw_attention_inputs: bool = False
    no_crossover: bool = False
    no_mutation: bool = False


@dataclass
class GradcheckResult:
    instances: int
    max_rel_error: float
    worst_param: str
    per_param: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def finite_difference_gradients(pop, fit, theta, elites, settings, masks,
                                step: float = 1e-5) -> ThetaGradients:
    """Central differences of the loss, re-running forward with frozen masks."""
    def loss_at(th):
        off, _ = reproduce(pop, fit, th, settings, masks=masks)
        return adaptation_loss(off, elites)

    out = theta.zeros_like()
    for name, p in theta.items():
        g = getattr(out, name)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            up = loss_at(theta)
            p[idx] = orig - step
            down = loss_at(theta)
            p[idx] = orig
            g[idx] = (up - down) / (2.0 * step)
    return out


def random_instance(rng: np.random.Generator, N=6, d=5, d_A=4, d_M=4,
                    p_C=0.3, p_M=0.3):
    pop = rng.uniform(-2.0, 2.0, size=(N, d))
    fit = rng.normal(size=N) * 10.0
    theta = init_theta(d, d_A, d_M, rng)
    for name in ("b1", "b2", "b3", "b4"):
        setattr(theta, name, rng.uniform(-0.5, 0.5, size=getattr(theta, name).shape))
    elites = pop + rng.normal(scale=0.5, size=(N, d))
    settings = _CheckSettings(d_A=d_A, p_C=p_C, p_M=p_M)
    # kept units carry the inverted-dropout factor, as in a default run
    masks = tuple((rng.random((N, d_M)) >= p).astype(float) / (1.0 - p) for p in (p_C, p_M))
    return pop, fit, theta, elites, settings, masks


def gradcheck(instances: int = 20, N: int = 6, d: int = 5, d_A: int = 4, d_M: int = 4,
              seed: int = 0, step: float = 1e-5, tol: float = 1e-4) -> GradcheckResult:
    """Compare analytic gradients to central differences on random instances."""
    rng = np.random.default_rng(seed)
    per_param: dict[str, float] = {}
    for _ in range(instances):
        pop, fit, theta, elites, settings, masks = random_instance(rng, N, d, d_A, d_M)
        _, trace = reproduce(pop, fit, theta, settings, masks=masks)
        analytic = backward(trace, elites, theta)
        numeric = finite_difference_gradients(pop, fit, theta, elites, settings, masks, step)
        for name, a in analytic.items():
            err = float(np.max(relative_error(a, getattr(numeric, name))))
            per_param[name] = max(per_param.get(name, 0.0), err)
    worst = max(per_param, key=per_param.get)
    return GradcheckResult(instances, per_param[worst], worst, per_param, tol)
