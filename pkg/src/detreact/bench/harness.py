"""Measurement harness.

One measurement runs a benchmark for a number of iterations, building a
fresh Environment every time and timing only the execution phase (topology
construction and validation are excluded). The leading warmup iterations are
dropped from the statistics. The validator must pass on every iteration,
warmup included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import stats as _scipy_stats

from ..core import Environment
from .registry import BenchmarkSpec, BenchmarkValidationError


@dataclass(frozen=True)
class MeasurementStats:
    benchmark: str
    workers: int
    warmup_ms: tuple  # excluded from the statistics below
    samples_ms: tuple  # retained per-iteration execution times
    mean_ms: float
    ci99_ms: float  # half-width of the Student-t 99% confidence interval

    @property
    def iterations(self) -> int:
        return len(self.warmup_ms) + len(self.samples_ms)


def student_t_ci99(samples) -> float:
    """Half-width of the two-sided 99% confidence interval for the mean."""
    n = len(samples)
    if n < 2:
        return 0.0
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    t_crit = float(_scipy_stats.t.ppf(0.995, n - 1))
    return t_crit * math.sqrt(var / n)


def run_once(spec: BenchmarkSpec, params: dict, workers: int = 1, fast: bool = True,
             trace: bool = False, jitter_ms: float = 0.0, jitter_seed: int = 0):
    """Build, run and validate a single fresh instance. Returns
    (instance, environment, report)."""
    instance = spec.build(params)
    env = Environment(instance.topology, workers=workers, fast=fast, trace=trace,
                      jitter_ms=jitter_ms, jitter_seed=jitter_seed)
    report = env.run()
    instance.validate(report)
    return instance, env, report


def run_benchmark(spec: BenchmarkSpec, params: dict | None = None, workers: int = 1,
                  iterations: int = 32, warmup: int = 2,
                  fast: bool = True) -> MeasurementStats:
    """Measure a benchmark. ``params`` are overrides on top of the
    benchmark's defaults; unknown keys are rejected."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not warmup < iterations:
        raise ValueError(f"warmup ({warmup}) must be smaller than iterations ({iterations})")
    resolved = spec.resolve_params(params)
    times_ms = []
    for i in range(iterations):
        try:
            _, _, report = run_once(spec, resolved, workers=workers, fast=fast)
        except BenchmarkValidationError as exc:
            raise BenchmarkValidationError(
                f"{spec.name} (workers={workers}, iteration {i}): {exc}") from None
        times_ms.append(report.duration_ns / 1e6)
    retained = times_ms[warmup:]
    return MeasurementStats(
        benchmark=spec.name,
        workers=workers,
        warmup_ms=tuple(times_ms[:warmup]),
        samples_ms=tuple(retained),
        mean_ms=sum(retained) / len(retained),
        ci99_ms=student_t_ci99(retained))
