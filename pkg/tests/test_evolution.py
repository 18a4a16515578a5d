import numpy as np
import pytest

from abom.benchmarks import BenchmarkFunction
from abom.config import ConfigError, OptimizerConfig
from abom.evolution import (ObjectiveError, clamp_to_bounds, elitism_merge,
                            run_abom)
from abom.numerics import NumericsError, RngStream


def test_merge_dominated_offspring_keeps_sorted_parents():
    pop = np.array([[1.0], [2.0], [3.0]])
    fit = np.array([5.0, 1.0, 3.0])
    off = np.array([[9.0], [8.0], [7.0]])
    elites, ef = elitism_merge(pop, fit, off, np.array([10.0, 11.0, 12.0]), 3)
    np.testing.assert_array_equal(ef, [1.0, 3.0, 5.0])
    np.testing.assert_array_equal(elites[:, 0], [2.0, 3.0, 1.0])


def test_merge_hand_example():
    _, ef = elitism_merge(np.zeros((2, 1)), [3.0, 1.0], np.ones((2, 1)), [2.0, 0.0], 2)
    np.testing.assert_array_equal(ef, [0.0, 1.0])


def test_merge_tie_prefers_parent():
    elites, ef = elitism_merge([[1.0], [5.0]], [0.0, 4.0], [[2.0], [6.0]], [0.0, 9.0], 2)
    np.testing.assert_array_equal(elites[:, 0], [1.0, 2.0])
    elites, _ = elitism_merge([[1.0], [5.0]], [2.0, 4.0], [[2.0], [6.0]], [4.0, 9.0], 2)
    np.testing.assert_array_equal(elites[:, 0], [1.0, 5.0])


def test_merge_duplicate_offspring_take_no_slot():
    pop = np.array([[1.0], [2.0]])
    elites, ef = elitism_merge(pop, [1.0, 4.0], pop.copy(), [1.0, 4.0], 2)
    np.testing.assert_array_equal(elites, pop)
    np.testing.assert_array_equal(ef, [1.0, 4.0])


def test_merge_shape_mismatch():
    with pytest.raises(NumericsError):
        elitism_merge(np.zeros((2, 2)), [0, 0], np.zeros((3, 2)), [0, 0, 0], 2)


def test_clamp_examples():
    x = np.array([[0.5, -3.0], [99.0, -100.0]])
    np.testing.assert_array_equal(clamp_to_bounds(x, -100, 100), x)
    assert clamp_to_bounds([[150.0]], -100, 100)[0, 0] == 100.0
    mixed = np.random.default_rng(0).uniform(-300, 300, size=(10, 4))
    out = clamp_to_bounds(mixed, -100, 100)
    assert np.all((out >= -100) & (out <= 100))


def _cfg(**kw):
    base = dict(dim=5, pop_size=10, budget=400, seed=3)
    base.update(kw)
    return OptimizerConfig(**base)


def test_small_sphere_run_improves_on_initial_best():
    f = BenchmarkFunction("sphere", 2)
    res = run_abom(f, OptimizerConfig(dim=2, pop_size=8, budget=400, seed=1))
    assert res.best_fitness <= res.trace[7]


def test_budget_arithmetic():
    res = run_abom(BenchmarkFunction("sphere", 3), _cfg(dim=3, pop_size=20, budget=20000))
    assert res.generations == 999
    assert res.evaluations == res.trace.size == 20000


@pytest.mark.parametrize("budget", [40, 59, 61, 133])
def test_budget_exactness(budget):
    n = 10
    res = run_abom(BenchmarkFunction("sphere", 2), _cfg(dim=2, pop_size=n, budget=budget))
    t = res.generations
    assert res.evaluations == n * (1 + t) <= budget < n * (2 + t)


def test_determinism():
    f = BenchmarkFunction("rastrigin", 5)
    a = run_abom(f, _cfg())
    b = run_abom(f, _cfg())
    assert a == b
    assert a.trace.tobytes() == b.trace.tobytes()
    assert a.loss_trace.tobytes() == b.loss_trace.tobytes()


def test_different_seeds_differ():
    f = BenchmarkFunction("rastrigin", 5)
    assert run_abom(f, _cfg(seed=1)) != run_abom(f, _cfg(seed=2))


def test_trace_monotone_and_points_in_bounds():
    seen = []

    def obj(x):
        seen.append(np.array(x))
        return float(np.sum(x ** 2))

    res = run_abom(obj, _cfg(lower=-5.0, upper=5.0))
    assert np.all(np.diff(res.trace) <= 0)
    pts = np.array(seen)
    assert np.all((pts >= -5.0) & (pts <= 5.0))
    assert len(seen) == res.evaluations <= 400
    assert res.loss_trace.shape == (res.generations,)


def test_identity_pipeline_freezes_population():
    pops = []

    def obj(x):
        pops.append(np.array(x))
        return float(np.sum(x ** 2))

    run_abom(obj, _cfg(no_crossover=True, no_mutation=True, no_adaptation=True))
    init = np.array(pops[:10])
    for g in range(1, len(pops) // 10):
        batch = np.array(pops[10 * g:10 * (g + 1)])
        # offspring of generation g equal the sorted initial elites
        np.testing.assert_array_equal(np.sort(batch, axis=0), np.sort(init, axis=0))


def test_no_adaptation_keeps_theta():
    res = run_abom(BenchmarkFunction("sphere", 4),
                   _cfg(dim=4, no_adaptation=True, record_theta=True))
    for name, p in res.initial_theta.items():
        assert np.array_equal(p, getattr(res.final_theta, name))


def test_adaptation_changes_theta():
    res = run_abom(BenchmarkFunction("sphere", 4), _cfg(dim=4, record_theta=True))
    assert any(not np.array_equal(p, getattr(res.final_theta, n))
               for n, p in res.initial_theta.items())


def test_sorted_pairing_runs():
    res = run_abom(BenchmarkFunction("sphere", 4), _cfg(dim=4, loss_pairing="sorted"))
    assert np.all(np.diff(res.trace) <= 0)


def test_non_finite_objective_aborts():
    calls = []

    def obj(x):
        calls.append(1)
        return np.nan if len(calls) == 15 else 1.0

    with pytest.raises(ObjectiveError, match="evaluation 15"):
        run_abom(obj, _cfg())


def test_explicit_rng_stream_overrides_seed():
    f = BenchmarkFunction("sphere", 3)
    a = run_abom(f, _cfg(dim=3, seed=0), RngStream(42))
    b = run_abom(f, _cfg(dim=3, seed=42))
    assert a == b


@pytest.mark.parametrize("kw", [
    {"pop_size": 1}, {"budget": 5}, {"p_C": 1.5}, {"lower": 1.0, "upper": 1.0},
    {"loss_pairing": "random"},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _cfg(**kw)
