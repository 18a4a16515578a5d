"""ABOM: evolutionary search with attention-based operators adapted online."""

from .adaptation import (AdamWState, adamw_step, adaptation_loss, backward,
                         gradcheck, init_theta)
from .baselines import (BaselineConfig, run_ablation, run_de, run_pso,
                        run_random_search)
from .benchmarks import (FUNCTION_IDS, BenchmarkFunction, UavScenario,
                         default_uav_scenario, evaluate, uav_path_cost)
from .config import OptimizerConfig
from .evolution import RunResult, clamp_to_bounds, elitism_merge, run_abom
from .numerics import RngStream, dropout_mask, latin_hypercube, softmax_rows
from .operators import (ForwardTrace, ThetaParams, crossover, mutate,
                        mutation_matrix, reproduce, selection_matrix)

__all__ = [
    "AdamWState", "BaselineConfig", "BenchmarkFunction", "FUNCTION_IDS",
    "ForwardTrace", "OptimizerConfig", "RngStream", "RunResult", "ThetaParams",
    "UavScenario", "adamw_step", "adaptation_loss", "backward", "clamp_to_bounds",
    "crossover", "default_uav_scenario", "dropout_mask", "elitism_merge", "evaluate",
    "gradcheck", "init_theta", "latin_hypercube", "mutate", "mutation_matrix",
    "reproduce", "run_abom", "run_ablation", "run_de", "run_pso",
    "run_random_search", "selection_matrix", "softmax_rows", "uav_path_cost",
]
