"""Differential Evolution with swappable strategies for infeasible solutions."""
from .core import (
    BoxDomain, Budget, BudgetExhausted, ConfigurationError, ContractViolation, Individual,
    Population, RngStream, derive_seed, infeasible_components, init_population, is_feasible,
)
from .engines import EngineConfig, EngineKind, run, run_with_population
from .functions import FUNCTION_IDS, ObjectiveFunction, make_objective, suite
from .instruments import RunLog, cs_ecdf, cumulative_pois, diversity, violation_frequency, windowed_pois
from .sdis import SdisKind, apply_sdis, correct_component, cosine_similarity, repair
from .variation import Crossover, DeParams, mutation_probability
from .analysis import ert, fixed_target_ecdf, hitting_times
from .experiment import ExperimentSpec, run_experiment

__version__ = "0.1.0"

__all__ = [
    "BoxDomain", "Budget", "BudgetExhausted", "ConfigurationError", "ContractViolation", "Individual",
    "Population", "RngStream", "derive_seed", "infeasible_components", "init_population", "is_feasible",
    "EngineConfig", "EngineKind", "run", "run_with_population",
    "FUNCTION_IDS", "ObjectiveFunction", "make_objective", "suite",
    "RunLog", "cs_ecdf", "cumulative_pois", "diversity", "violation_frequency", "windowed_pois",
    "SdisKind", "apply_sdis", "correct_component", "cosine_similarity", "repair",
    "Crossover", "DeParams", "mutation_probability",
    "ert", "fixed_target_ecdf", "hitting_times", "ExperimentSpec", "run_experiment",
]
