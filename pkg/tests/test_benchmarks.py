import math

import numpy as np
import pytest

from abom.benchmarks import (FUNCTION_IDS, BenchmarkFunction, Cylinder,
                             UavScenario, UnknownBenchmark, default_uav_scenario,
                             evaluate, uav_path_cost)


def test_ten_functions():
    assert len(FUNCTION_IDS) == 10


@pytest.mark.parametrize("name,x", [
    ("sphere", np.zeros(4)), ("rastrigin", np.zeros(4)), ("rosenbrock", np.ones(4)),
])
def test_textbook_optima(name, x):
    assert evaluate(name, x) == 0.0


@pytest.mark.parametrize("name", FUNCTION_IDS)
@pytest.mark.parametrize("dim", [2, 10, 30])
def test_optimum_location_attains_value(name, dim):
    f = BenchmarkFunction(name, dim)
    x = f.optimum_location
    assert np.all((x >= f.lower) & (x <= f.upper))
    assert f(x) == pytest.approx(f.optimum_value, abs=1e-3 * dim)


@pytest.mark.parametrize("name", FUNCTION_IDS)
def test_never_below_optimum_on_random_sample(name):
    f = BenchmarkFunction(name, 10)
    rng = np.random.default_rng(hash(name) % 2**32)
    pts = rng.uniform(-100, 100, size=(10**5, 10))
    # include points close to the optimum, where violations would show up
    pts[:1000] = f.optimum_location + rng.normal(scale=1e-2, size=(1000, 10))
    vals = np.array([f(p) for p in pts])
    assert np.all(np.isfinite(vals))
    assert vals.min() >= f.optimum_value - 1e-4


def test_hand_values():
    assert evaluate("sphere", [1.0, 2.0]) == 5.0
    assert evaluate("ellipsoidal", [1.0, 1.0]) == pytest.approx(1.0 + 1e6)
    assert evaluate("bent_cigar", [1.0, 1.0]) == pytest.approx(1.0 + 1e6)
    assert evaluate("discus", [1.0, 1.0]) == pytest.approx(1e6 + 1.0)
    assert evaluate("sharp_ridge", [1.0, 3.0, 4.0]) == pytest.approx(1.0 + 500.0)
    assert evaluate("different_powers", [2.0, 1.0]) == pytest.approx(math.sqrt(4.0 + 1.0))
    assert evaluate("rosenbrock", [0.0, 0.0]) == 1.0


def test_evaluate_errors():
    with pytest.raises(UnknownBenchmark):
        evaluate("nope", np.zeros(3))
    with pytest.raises(ValueError):
        evaluate(BenchmarkFunction("sphere", 3), np.zeros(4))


def test_uav_straight_line():
    sc = UavScenario(start=(0, 0, 0), goal=(10, 0, 0), n_nodes=3)
    nodes = [2.0, 0, 0, 5.0, 0, 0, 7.5, 0, 0]
    assert uav_path_cost(sc, nodes) == pytest.approx(10.0, abs=1e-12)


def test_uav_two_segments():
    sc = UavScenario(start=(0, 0, 0), goal=(4, 0, 0), n_nodes=1)
    assert uav_path_cost(sc, [2.0, 3.0, 0.0]) == pytest.approx(2 * math.sqrt(13), abs=1e-12)


def test_uav_threat_penalty_positive():
    free = UavScenario(start=(0, 0, 5), goal=(100, 0, 5), n_nodes=1)
    threat = UavScenario(start=(0, 0, 5), goal=(100, 0, 5), n_nodes=1,
                         threats=[Cylinder(50.0, 0.0, 10.0, 20.0)])
    node = [50.0, 0.0, 5.0]
    assert threat(node) > free(node)
    assert free(node) == pytest.approx(100.0)


def test_uav_ground_penalty():
    sc = UavScenario(start=(0, 0, 0), goal=(10, 0, 0), n_nodes=1)
    assert sc([5.0, 0.0, -2.0]) > 2 * math.hypot(5.0, 2.0)


def test_uav_duplicate_node_invariance():
    sc = default_uav_scenario()
    rng = np.random.default_rng(1)
    lo, hi = sc.bounds()
    nodes = rng.uniform(lo, hi).reshape(-1, 3)
    dup = np.insert(nodes, 4, nodes[4], axis=0)
    sc2 = UavScenario.from_json(sc.to_json())
    sc2.n_nodes = sc.n_nodes + 1
    assert sc2(dup.ravel()) == pytest.approx(sc(nodes.ravel()), rel=1e-12)


def test_uav_json_round_trip(tmp_path):
    sc = default_uav_scenario()
    path = tmp_path / "s.json"
    path.write_text(sc.to_json())
    back = UavScenario.load(path)
    assert back == sc
    assert back.dim == 30 and len(back.threats) == 5


def test_uav_validation():
    with pytest.raises(ValueError):
        UavScenario(start=(0, 0, 0), goal=(1, 0, 0), n_nodes=0)
    with pytest.raises(ValueError):
        UavScenario(start=(0, 0, 0), goal=(1, 0, 0), n_nodes=1,
                    threats=[Cylinder(0.0, 0.0, 5.0, 10.0)])
    with pytest.raises(ValueError):
        UavScenario(start=(0, 0, 0), goal=(1, 0, 0), n_nodes=1,
                    threats=[Cylinder(50.0, 0.0, -1.0, 10.0)])
    with pytest.raises(ValueError):
        uav_path_cost(UavScenario(start=(0, 0, 0), goal=(1, 0, 0), n_nodes=2), np.zeros(5))


def test_default_scenario_is_seeded():
    assert default_uav_scenario() == default_uav_scenario()
    assert default_uav_scenario(seed=8) != default_uav_scenario()
