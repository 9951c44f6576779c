"""
Acceptance-scale Monte-Carlo checks of the end-to-end guarantees.

Every trial draws a fresh stream and a fresh master seed. Run with
``pytest --runslow``.
"""

import time
from typing import Dict, List, Tuple

import numpy as np
import pytest

from turnstilesampler.core import container
from turnstilesampler.core.config import build_config
from turnstilesampler.core.errors import EstimationError, ExtractionError
from turnstilesampler.core.field_hash import PointBatch, derive_seed, make_hash
from turnstilesampler.core.sampler import LEVEL_DOMAIN, SamplerSketch
from turnstilesampler.recovery.level_map import LevelMap
from turnstilesampler.stats import inverse_point, jaccard

pytestmark = pytest.mark.slow

UNIVERSE = 1 << 32


def _survivors(rng: np.random.Generator, distinct: int, nonstrict: bool = False) -> Dict[int, int]:
    values = rng.choice(UNIVERSE - 1, size=distinct, replace=False) + 1
    totals = rng.integers(1, 6, size=distinct)
    if nonstrict:
        totals = np.where(rng.random(distinct) < 0.5, -totals, totals)
    return {int(k): int(c) for k, c in zip(values, totals)}


def _stream(rng: np.random.Generator, totals: Dict[int, int]) -> List[Tuple[int, int]]:
    """Each total split into an over-insert and a partial delete."""
    updates = []
    for k, c in totals.items():
        extra = int(rng.integers(0, 2))
        updates.append((k, c + extra if c > 0 else c - extra))
        if extra:
            updates.append((k, -extra if c > 0 else extra))
    return [updates[i] for i in rng.permutation(len(updates))]


def _sketch(trial: int, updates, **overrides) -> SamplerSketch:
    values = {"k": 64, "delta": 0.1, "seed": trial, "l0_kind": "exact"}
    values.update(overrides)
    sketch = SamplerSketch(build_config(**values))
    sketch.update_many(updates)
    return sketch


def _oracle_level(sketch: SamplerSketch, totals: Dict[int, int], level: int) -> Dict[int, int]:
    return {k: c for k, c in totals.items() if sketch.level_of(k) == level}


@pytest.mark.parametrize("l0_kind", ["exact", "amplified"])
@pytest.mark.parametrize("model", ["strict", "nonstrict"])
def test_frs_recovers_selected_level(model, l0_kind):
    trials, passed = 300, 0
    for trial in range(trials):
        rng = np.random.default_rng(trial)
        totals = _survivors(rng, 100_000, nonstrict=model == "nonstrict")
        sketch = _sketch(trial, _stream(rng, totals), model=model, l0_kind=l0_kind)
        try:
            sample = sketch.extract()
        except ExtractionError:
            continue
        oracle = _oracle_level(sketch, totals, sample.level)
        if sample.entries == oracle and 64 <= len(sample) <= 7 * 64:
            passed += 1
    assert passed >= 0.85 * trials


@pytest.mark.parametrize("model", ["strict", "nonstrict"])
def test_efrs_partial_recovery(model):
    trials, passed = 300, 0
    for trial in range(trials):
        rng = np.random.default_rng(10_000 + trial)
        totals = _survivors(rng, 100_000, nonstrict=model == "nonstrict")
        sketch = _sketch(trial, _stream(rng, totals), model=model, k=512, recovery="efrs", eps=0.1)
        sample = sketch.extract()
        oracle = _oracle_level(sketch, totals, sample.level)
        sound = all(oracle.get(k) == c for k, c in sample.entries.items())
        if sound and len(sample) >= 0.9 * len(oracle):
            passed += 1
    assert passed >= 0.85 * trials


def test_level_occupancy():
    config = build_config(k=100, delta=0.1)
    trials, passed = 500, 0
    for trial in range(trials):
        rng = np.random.default_rng(20_000 + trial)
        keys = [int(k) for k in rng.choice(UNIVERSE - 1, size=20_000, replace=False) + 1]
        level_hash = make_hash(
            derive_seed(trial, LEVEL_DOMAIN),
            config.level_hash_independence,
            config.level_hash_range,
        )
        level_map = LevelMap(level_hash, config.decay, config.alpha)
        estimate = len(keys) * float(rng.uniform(1.0, config.alpha))
        selection = level_map.select_level(estimate, config.k)
        hashed = level_hash.evaluate_batch(PointBatch(keys, level_hash.independence))
        levels = [level_map.level_of_hash(h) for h in hashed]
        occupancy = sum(1 for level in levels if level == selection.level)
        if config.k <= occupancy <= 7 * config.k:
            passed += 1
    assert passed >= (1 - 0.1 - 0.05) * trials


def _zipf_totals(rng: np.random.Generator, distinct: int) -> Dict[int, int]:
    values = rng.choice(UNIVERSE - 1, size=distinct, replace=False) + 1
    totals = np.minimum(rng.zipf(1.1, size=distinct), 1 << 20)
    return {int(k): int(c) for k, c in zip(values, totals)}


def test_inverse_distribution():
    eps, delta = 0.1, 0.1
    k = int(np.ceil(4 / eps ** 2 * np.log(1 / delta)))
    trials, passed = 100, 0
    for trial in range(trials):
        rng = np.random.default_rng(30_000 + trial)
        totals = _zipf_totals(rng, 100_000)
        # churn: values inserted and fully deleted again
        ghosts = [(int(g), 1) for g in rng.choice(UNIVERSE - 1, size=5_000, replace=False) + 1]
        ghosts = [g for g in ghosts if g[0] not in totals]
        updates = _stream(rng, totals) + ghosts + [(g, -1) for g, _ in ghosts]
        sketch = _sketch(trial, updates, k=k, delta=delta, max_count=1 << 21)
        try:
            sample = sketch.extract()
        except ExtractionError:
            continue
        observed = np.array(list(totals.values()))
        if all(
            abs(inverse_point(sample, i).value - float(np.mean(observed == i))) <= eps
            for i in (1, 2, 3)
        ):
            passed += 1
    assert passed >= 0.8 * trials


def test_jaccard_half_overlap():
    k = int(np.ceil(4 / 0.1 ** 2 * np.log(10)))
    trials, passed = 100, 0
    for trial in range(trials):
        rng = np.random.default_rng(40_000 + trial)
        values = [int(v) for v in rng.choice(UNIVERSE - 1, size=15_000, replace=False) + 1]
        a_values, b_values = values[:10_000], values[5_000:]
        a = _sketch(trial, [(v, 1) for v in a_values], k=k)
        b = _sketch(trial, [(v, 1) for v in b_values], k=k)
        try:
            estimate = jaccard(a, b).value
        except EstimationError:
            continue
        if abs(estimate - 1 / 3) <= 0.1:
            passed += 1
    assert passed >= 0.7 * trials


def test_level_counts_within_tail_bound(tail_tolerance):
    config = build_config(k=64, delta=0.1)
    trials, distinct = 100, 20_000
    for trial in range(trials):
        rng = np.random.default_rng(45_000 + trial)
        keys = [int(k) for k in rng.choice(UNIVERSE - 1, size=distinct, replace=False) + 1]
        level_hash = make_hash(
            derive_seed(trial, LEVEL_DOMAIN),
            config.level_hash_independence,
            config.level_hash_range,
        )
        level_map = LevelMap(level_hash, config.decay, config.alpha)
        hashed = level_hash.evaluate_batch(PointBatch(keys, level_hash.independence))
        counts = np.bincount([level_map.level_of_hash(h) for h in hashed], minlength=4)
        for level in range(4):
            expected = distinct * level_map.level_fraction(level)
            slack = tail_tolerance(expected, config.level_hash_independence) * expected
            assert abs(counts[level] - expected) <= slack


def test_merge_matches_concatenation():
    for trial in range(100):
        rng = np.random.default_rng(50_000 + trial)
        first = _stream(rng, _survivors(rng, 1_000, nonstrict=True))
        second = _stream(rng, _survivors(rng, 1_000, nonstrict=True))
        options = {"model": "nonstrict", "l0_kind": "amplified"}
        a = _sketch(trial, first, **options)
        b = _sketch(trial, second, **options)
        whole = _sketch(trial, first + second, **options)
        assert container.dumps(a.merge(b)) == container.dumps(whole)
        assert container.dumps(whole.merge(b, -1)) == container.dumps(a)
        assert a.merge(a, -1).extract().is_empty


def test_containers_ignore_update_order():
    for trial in range(100):
        rng = np.random.default_rng(55_000 + trial)
        updates = _stream(rng, _survivors(rng, 1_000))
        # ghosts: values inserted and deleted again
        ghosts = [int(g) for g in rng.choice(UNIVERSE - 1, size=200, replace=False) + 1]
        updates += [(g, 2) for g in ghosts] + [(g, -2) for g in ghosts]
        reference = container.dumps(_sketch(trial, updates, l0_kind="amplified"))
        for _ in range(5):
            shuffled = [updates[i] for i in rng.permutation(len(updates))]
            assert container.dumps(_sketch(trial, shuffled, l0_kind="amplified")) == reference


INGEST_UPDATES = 1_000_000


@pytest.fixture(scope="module")
def ingest_seconds() -> Dict[str, float]:
    """Wall-clock seconds to ingest one stream of 10^6 updates at K=64, per recovery kind."""
    rng = np.random.default_rng(60_000)
    keys = rng.integers(1, UNIVERSE, size=INGEST_UPDATES).tolist()
    counts = rng.integers(1, 4, size=INGEST_UPDATES).tolist()
    updates = list(zip(keys, counts))
    seconds = {}
    for recovery, extra in (("frs", {}), ("efrs", {"eps": 0.1})):
        config = build_config(k=64, delta=0.1, seed=60_000, recovery=recovery, **extra)
        sketch = SamplerSketch(config)
        started = time.perf_counter()
        sketch.update_many(updates)
        sketch.flush()
        seconds[recovery] = time.perf_counter() - started
    return seconds


def test_frs_ingest_throughput(ingest_seconds):
    assert ingest_seconds["frs"] < 60.0


def test_efrs_ingest_cheaper_than_frs(ingest_seconds):
    assert ingest_seconds["efrs"] < ingest_seconds["frs"]
