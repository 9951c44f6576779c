"""Shared fixtures: seeded generators, stream builders and exact oracles."""

from typing import Callable, Dict, List, Tuple

import numpy as np
import pytest
from prometheus_client import CollectorRegistry

from turnstilesampler.core.config import SamplerConfig, build_config
from turnstilesampler.core.sampler import SamplerSketch
from turnstilesampler.stats.bounds import tail_bound
from turnstilesampler.utils.metrics import MetricsCollector

Updates = List[Tuple[int, int]]
Totals = Dict[int, int]


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run acceptance-scale tests"
    )


def pytest_collection_modifyitems(config: pytest.Config, items: List[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="acceptance-scale; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tail_tolerance() -> Callable[..., float]:
    """
    Relative deviation a sum of l-wise independent indicators exceeds with
    probability at most ``confidence``, per ``stats.tail_bound``.
    """

    def tolerance(expected: float, independence: int, confidence: float = 1e-3) -> float:
        deviation = 0.01
        while tail_bound(expected, independence, deviation) > confidence:
            deviation += 0.01
        return deviation

    return tolerance


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture
def metrics() -> MetricsCollector:
    return MetricsCollector(registry=CollectorRegistry())


def make_stream(
    rng: np.random.Generator,
    distinct: int,
    universe: int = 1 << 20,
    nonstrict: bool = False,
    churn: int = 0,
    max_total: int = 3,
) -> Tuple[Updates, Totals]:
    """
    Random turnstile stream and its exact totals.

    Every surviving value gets a non-zero total, split over an insert and
    a partial delete; ``churn`` extra values are inserted and deleted
    again. Non-strict streams draw totals of both signs.
    """
    values = rng.choice(universe - 1, size=distinct + churn, replace=False) + 1
    survivors, ghosts = values[:distinct], values[distinct:]
    totals: Totals = {}
    updates: Updates = []
    for k in survivors:
        total = int(rng.integers(1, max_total + 1))
        if nonstrict and rng.random() < 0.5:
            total = -total
        extra = int(rng.integers(0, 3))
        totals[int(k)] = total
        updates.append((int(k), total + extra))
        if extra:
            updates.append((int(k), -extra))
    for k in ghosts:
        c = int(rng.integers(1, 4))
        updates.append((int(k), c))
        updates.append((int(k), -c))
    order = rng.permutation(len(updates))
    return [updates[i] for i in order], totals


@pytest.fixture
def stream_factory(rng: np.random.Generator) -> Callable[..., Tuple[Updates, Totals]]:
    def factory(distinct: int, **kwargs) -> Tuple[Updates, Totals]:
        return make_stream(rng, distinct, **kwargs)

    return factory


@pytest.fixture
def config_factory() -> Callable[..., SamplerConfig]:
    def factory(**overrides) -> SamplerConfig:
        values = {"k": 8, "delta": 0.1, "l0_kind": "exact", "seed": 7}
        values.update(overrides)
        return build_config(**values)

    return factory


@pytest.fixture
def sketch_factory(
    config_factory: Callable[..., SamplerConfig], metrics: MetricsCollector
) -> Callable[..., SamplerSketch]:
    def factory(updates: Updates = (), **overrides) -> SamplerSketch:
        sketch = SamplerSketch(config_factory(**overrides), metrics=metrics)
        sketch.update_many(updates)
        return sketch

    return factory
