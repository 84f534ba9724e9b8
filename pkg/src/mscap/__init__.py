"""Multi-Strategy Coevolving Aging Particles optimizer, benchmarks and comparison tooling."""

from .algorithm import run
from .baseline import run_de
from .benchmarks import get_benchmark, list_benchmarks, make_benchmark, BenchmarkSpec
from .core import (
    Bounds,
    BudgetExhausted,
    BudgetLedger,
    ConfigurationError,
    EvaluationError,
    Problem,
    RunConfig,
    RunRecord,
    Swarm,
    evaluate,
    init_velocity,
    toroidal_wrap,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec", "Bounds", "BudgetExhausted", "BudgetLedger", "ConfigurationError",
    "EvaluationError", "Problem", "RunConfig", "RunRecord", "Swarm", "evaluate",
    "get_benchmark", "init_velocity", "list_benchmarks", "make_benchmark", "run", "run_de",
    "toroidal_wrap",
]
