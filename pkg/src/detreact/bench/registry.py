"""Benchmark registry: named, parameterized topology builders with validators.

Each benchmark builds a fresh topology per iteration and checks its own
functional result after the run; timing without a passing validator is
meaningless, so validation failures abort the measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..core import ReactorTopology

GROUP_MICRO = "micro"
GROUP_CONCURRENCY = "concurrency"
GROUP_PARALLELISM = "parallelism"


class BenchmarkValidationError(Exception):
    """A benchmark's functional result was wrong."""


class UnknownBenchmarkError(KeyError):
    def __init__(self, name: str, known):
        super().__init__(name)
        self.message = f"unknown benchmark {name!r}; known: {', '.join(known)}"

    def __str__(self) -> str:
        return self.message


@dataclass
class BenchmarkInstance:
    """One freshly built, runnable copy of a benchmark."""

    topology: ReactorTopology
    validate: Callable  # validate(report) -> None, raises BenchmarkValidationError


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str  # registry key, e.g. "DiningPhilosophers"
    title: str  # display name, e.g. "Dining Philosophers"
    group: str
    defaults: Mapping[str, object] = field(default_factory=dict)
    build: Callable[[dict], BenchmarkInstance] = None

    def resolve_params(self, overrides: Mapping[str, object] | None = None) -> dict:
        params = dict(self.defaults)
        for key, value in (overrides or {}).items():
            if key not in params:
                raise KeyError(
                    f"benchmark {self.name}: unknown parameter {key!r} "
                    f"(accepts: {', '.join(sorted(params))})")
            params[key] = value
        return params


_REGISTRY: dict[str, BenchmarkSpec] = {}


def register(spec: BenchmarkSpec) -> BenchmarkSpec:
    if spec.name in _REGISTRY:
        raise ValueError(f"benchmark {spec.name!r} registered twice")
    _REGISTRY[spec.name] = spec
    return spec


def list_benchmarks() -> list[BenchmarkSpec]:
    """All registered benchmarks, in registration (group) order."""
    return list(_REGISTRY.values())


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownBenchmarkError(name, list(_REGISTRY)) from None


def check(condition: bool, message: str) -> None:
    if not condition:
        raise BenchmarkValidationError(message)
