"""Benchmark suite: desk-scale actor-style workloads with exact validators.

Importing this package registers all benchmarks. Defaults are intentionally
10-100x smaller than the classic actor-suite sizes so a full sweep runs on a
laptop; the original scales remain reachable through parameter overrides.
"""

# Import order fixes registry order: micro, then concurrency, then parallelism.
from . import micro  # noqa: F401  (registration side effects)
from . import concurrency  # noqa: F401
from . import parallel  # noqa: F401
from .harness import MeasurementStats, run_benchmark, run_once, student_t_ci99
from .lcg import Lcg64
from .registry import (GROUP_CONCURRENCY, GROUP_MICRO, GROUP_PARALLELISM,
                       BenchmarkInstance, BenchmarkSpec,
                       BenchmarkValidationError, UnknownBenchmarkError,
                       get_benchmark, list_benchmarks)

__all__ = [
    "BenchmarkInstance", "BenchmarkSpec", "BenchmarkValidationError",
    "GROUP_CONCURRENCY", "GROUP_MICRO", "GROUP_PARALLELISM", "Lcg64",
    "MeasurementStats", "UnknownBenchmarkError", "get_benchmark",
    "list_benchmarks", "run_benchmark", "run_once", "student_t_ci99",
]
