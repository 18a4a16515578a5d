from dataclasses import dataclass

import numpy as np
import pytest

import oracles
from abom.adaptation import init_theta
from abom.numerics import NumericsError, RngStream
from abom.operators import (ThetaParams, crossover, dropout_scale, mutate,
                            mutation_matrix, reproduce, selection_matrix)


@dataclass
class Settings:
    d_A: int
    p_C: float = 0.5
    p_M: float = 0.5
    no_crossover: bool = False
    no_mutation: bool = False
    raw_attention_inputs: bool = False
    dropout_scaling: str = "inverted"


def random_theta(rng, d, d_A, d_M, bias=0.5):
    th = init_theta(d, d_A, d_M, rng)
    for name in ("b1", "b2", "b3", "b4"):
        setattr(th, name, rng.uniform(-bias, bias, size=getattr(th, name).shape))
    return th


def test_selection_single_individual():
    th = random_theta(np.random.default_rng(0), 3, 2, 2)
    np.testing.assert_array_equal(selection_matrix([[1.0, 2.0, 3.0]], [5.0], th, 2), [[1.0]])


def test_selection_symmetric_inputs_are_uniform():
    th = random_theta(np.random.default_rng(1), 3, 2, 2)
    pop = np.tile([1.0, -2.0, 0.5], (4, 1))
    A = selection_matrix(pop, np.full(4, 3.0), th, 2)
    np.testing.assert_allclose(A, 0.25, atol=1e-15)


@pytest.mark.parametrize("raw", [False, True])
def test_selection_matches_loop_oracle(raw):
    rng = np.random.default_rng(2)
    pop = rng.uniform(-3, 3, size=(4, 3))
    fit = rng.normal(size=4)
    th = random_theta(rng, 3, 2, 2)
    A = selection_matrix(pop, fit, th, 2, raw_attention_inputs=raw)
    ref = oracles.selection_matrix(pop.tolist(), fit.tolist(), oracles.to_lists(th), 2,
                                   standardize=not raw)
    np.testing.assert_allclose(A, ref, atol=1e-10)


def test_selection_shape_mismatch():
    th = random_theta(np.random.default_rng(0), 3, 2, 2)
    with pytest.raises(NumericsError):
        selection_matrix(np.ones((4, 3)), np.ones(3), th, 2)


def test_crossover_zero_theta_is_identity():
    rng = np.random.default_rng(3)
    pop = rng.normal(size=(5, 3))
    th = ThetaParams.zeros(3, 3, 2)
    A = np.full((5, 5), 0.2)
    out, _ = crossover(pop, A, th, 0.5, rng)
    np.testing.assert_array_equal(out, pop)


def test_crossover_full_dropout_adds_bias():
    rng = np.random.default_rng(4)
    pop = rng.normal(size=(3, 2))
    th = random_theta(rng, 2, 2, 2)
    A = np.full((3, 3), 1 / 3)
    out, frag = crossover(pop, A, th, 1.0, rng)
    assert not frag["c_mask"].any()
    np.testing.assert_allclose(out, pop + th.b2[None, :], atol=0)


def test_crossover_matches_loop_oracle():
    rng = np.random.default_rng(5)
    pop = rng.uniform(-2, 2, size=(3, 2))
    th = random_theta(rng, 2, 2, 2)
    A = rng.dirichlet(np.ones(3), size=3)
    mask = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    out, _ = crossover(pop, A, th, 0.5, mask=mask)
    ref = oracles.crossover(pop.tolist(), A.tolist(), oracles.to_lists(th), mask.tolist())
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_mutation_matrix_zero_attention_uniform():
    th = random_theta(np.random.default_rng(6), 4, 3, 2)
    th.W_QM[:] = 0.0
    th.W_KM[:] = 0.0
    np.testing.assert_allclose(mutation_matrix([1.0, 5.0, -2.0, 0.3], th, 3), 0.25, atol=1e-15)


def test_mutation_matrix_single_gene():
    th = random_theta(np.random.default_rng(7), 1, 1, 1)
    np.testing.assert_array_equal(mutation_matrix([3.0], th, 1), [[1.0]])


@pytest.mark.parametrize("raw", [False, True])
def test_mutation_matrix_matches_loop_oracle(raw):
    rng = np.random.default_rng(8)
    th = random_theta(rng, 4, 3, 2)
    g = rng.uniform(-2, 2, size=4)
    M = mutation_matrix(g, th, 3, raw_attention_inputs=raw)
    ref = oracles.mutation_matrix(g.tolist(), oracles.to_lists(th), 3, standardize=not raw)
    np.testing.assert_allclose(M, ref, atol=1e-10)


def test_mutate_zero_theta_is_identity():
    rng = np.random.default_rng(9)
    pp = rng.normal(size=(4, 3))
    out, _ = mutate(pp, ThetaParams.zeros(3, 3, 2), 0.5, 3, rng)
    np.testing.assert_array_equal(out, pp)


def test_mutate_full_dropout_adds_bias():
    rng = np.random.default_rng(10)
    pp = rng.normal(size=(4, 3))
    th = random_theta(rng, 3, 3, 2)
    out, _ = mutate(pp, th, 1.0, 3, rng)
    np.testing.assert_allclose(out, pp + th.b4[None, :], atol=0)


def test_mutate_matches_loop_oracle():
    rng = np.random.default_rng(11)
    pp = rng.uniform(-2, 2, size=(2, 3))
    th = random_theta(rng, 3, 2, 2)
    mask = np.array([[0.0, 2.0], [2.0, 2.0]])
    out, _ = mutate(pp, th, 0.5, 2, mask=mask)
    ref = oracles.mutate(pp.tolist(), oracles.to_lists(th), 2, mask.tolist())
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_reproduce_zero_theta_identity():
    rng = np.random.default_rng(12)
    pop = rng.uniform(-100, 100, size=(6, 4))
    off, trace = reproduce(pop, rng.normal(size=6), ThetaParams.zeros(4, 4, 4),
                           Settings(d_A=4), RngStream(1))
    assert np.array_equal(off, pop)
    assert off.shape == trace.offspring.shape == (6, 4)


def test_reproduce_matches_composed_oracles():
    rng = np.random.default_rng(13)
    pop = rng.uniform(-2, 2, size=(3, 2))
    fit = rng.normal(size=3)
    th = random_theta(rng, 2, 2, 2)
    cm = np.array([[2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
    mm = np.array([[2.0, 2.0], [0.0, 2.0], [2.0, 0.0]])
    off, _ = reproduce(pop, fit, th, Settings(d_A=2), masks=(cm, mm))
    ref = oracles.reproduce(pop.tolist(), fit.tolist(), oracles.to_lists(th), 2,
                            cm.tolist(), mm.tolist())
    np.testing.assert_allclose(off, ref, atol=1e-9)


def test_reproduce_different_draws_differ():
    rng = np.random.default_rng(14)
    pop = rng.uniform(-5, 5, size=(5, 3))
    fit = rng.normal(size=5)
    th = random_theta(rng, 3, 3, 4)
    a, _ = reproduce(pop, fit, th, Settings(d_A=3), RngStream(1))
    b, _ = reproduce(pop, fit, th, Settings(d_A=3), RngStream(2))
    assert not np.array_equal(a, b)


def test_reproduce_deterministic():
    rng = np.random.default_rng(15)
    pop = rng.uniform(-5, 5, size=(5, 3))
    fit = rng.normal(size=5)
    th = random_theta(rng, 3, 3, 4)
    a, ta = reproduce(pop, fit, th, Settings(d_A=3), RngStream(9, (1,)))
    b, tb = reproduce(pop, fit, th, Settings(d_A=3), RngStream(9, (1,)))
    assert np.array_equal(a, b)
    assert np.array_equal(ta.c_mask, tb.c_mask) and np.array_equal(ta.m_mask, tb.m_mask)


def test_persistent_stochasticity():
    rng = np.random.default_rng(16)
    pop = rng.uniform(-5, 5, size=(4, 3))
    fit = rng.normal(size=4)
    th = random_theta(rng, 3, 3, 4)
    outs = {reproduce(pop, fit, th, Settings(d_A=3, p_C=0.95, p_M=0.95),
                      RngStream(0, (k,)))[0].tobytes() for k in range(100)}
    assert len(outs) >= 2


def test_reproduce_ablation_flags():
    rng = np.random.default_rng(17)
    pop = rng.uniform(-5, 5, size=(4, 3))
    fit = rng.normal(size=4)
    th = random_theta(rng, 3, 3, 4)
    off, trace = reproduce(pop, fit, th, Settings(d_A=3, no_crossover=True, no_mutation=True),
                           RngStream(0))
    assert np.array_equal(off, pop)
    off, trace = reproduce(pop, fit, th, Settings(d_A=3, no_mutation=True), RngStream(0))
    assert np.array_equal(off, trace.pop_prime)


def test_dropout_scale_values():
    assert dropout_scale(0.95, "inverted") == pytest.approx(20.0)
    assert dropout_scale(0.95, "none") == 1.0
    assert dropout_scale(1.0, "inverted") == 1.0
    with pytest.raises(NumericsError):
        dropout_scale(0.5, "bogus")


def test_scaled_masks_take_two_values():
    rng = np.random.default_rng(18)
    pop = rng.uniform(-5, 5, size=(20, 3))
    _, trace = reproduce(pop, rng.normal(size=20), random_theta(rng, 3, 3, 4),
                         Settings(d_A=3, p_C=0.75, p_M=0.75), RngStream(4))
    assert set(np.unique(trace.c_mask)) <= {0.0, 4.0}
