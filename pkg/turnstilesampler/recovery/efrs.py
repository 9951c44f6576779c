"""
Epsilon-full recovery structure.

Two arrays of s = 4K bins addressed by two t-wise independent hashes.
Every bin keeps W = sum c * h_other(k), so a bin holding the single
element (k, C) names the element's bin in the other array as W / C
without evaluating a hash. Recovery peels: isolated elements are
extracted, subtracted from both their bins, and the twin bin is queued.
Whatever remains is a fail set: elements colliding in both their bins
with other remaining elements.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from ..core.errors import ConfigurationError
from ..core.field_hash import HashFn, PointBatch, derive_seed, make_hash
from .bin_sketch import NonStrictBinSketch, StrictBinSketch, combine
from .frs import NONSTRICT, STRICT

MIN_INDEPENDENCE = 32


def efrs_independence(capacity: int, delta: float, factor: float = 2.0) -> int:
    """t = max(32, ceil(factor * log2(K/delta))), rounded up to even."""
    t = max(MIN_INDEPENDENCE, math.ceil(factor * math.log2(capacity / delta)))
    return t + (t % 2)


@dataclass(frozen=True)
class EfrsConfig:
    """Geometry and hashes of an epsilon-full recovery structure."""

    mode: str
    capacity: int
    width: int
    independence: int
    hashes: Tuple[HashFn, HashFn]
    universe: int
    guard: Optional[HashFn] = None

    @classmethod
    def build(
        cls,
        mode: str,
        capacity: int,
        delta: float,
        seed: int,
        universe: int,
        width: Optional[int] = None,
        independence: Optional[int] = None,
        array_domain: int = 0x02,
        guard_domain: int = 0x03,
    ) -> "EfrsConfig":
        """
        Size the structure for ``capacity`` values.

        Width defaults to 4K; the non-strict guard hash has range
        q = ceil(4K/delta) and the same independence as the array hashes.
        """
        if mode not in (STRICT, NONSTRICT):
            raise ConfigurationError(f"unknown stream model {mode!r}")
        width = width or 4 * capacity
        t = independence or efrs_independence(capacity, delta)
        if t < 2 or t % 2:
            raise ConfigurationError(f"eFRS independence must be even, got {t}")
        hashes = (
            make_hash(derive_seed(seed, array_domain, 0), t, width),
            make_hash(derive_seed(seed, array_domain, 1), t, width),
        )
        guard = None
        if mode == NONSTRICT:
            q = max(2, math.ceil(4 * capacity / delta))
            guard = make_hash(derive_seed(seed, guard_domain), t, q)
        return cls(mode, capacity, width, t, hashes, universe, guard)

    @property
    def guard_range(self) -> int:
        return self.guard.range if self.guard is not None else 0

    def locate_batch(self, batch: PointBatch) -> List[Tuple[Tuple[int, int], Optional[int]]]:
        """Bins of every batch key in both arrays, with its guard value when non-strict."""
        h1, h2 = self.hashes
        located = list(zip(h1.evaluate_batch(batch), h2.evaluate_batch(batch)))
        if self.guard is None:
            return [(bins, None) for bins in located]
        return list(zip(located, self.guard.evaluate_batch(batch)))


@dataclass
class EfrsRecovery:
    """Peeling outcome: the partial sample plus diagnostics."""

    entries: Dict[int, int] = field(default_factory=dict)
    # value -> (array, bin) of its twin, as read from W
    twins: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    residual_bins: int = 0
    anomalies: int = 0
    queue_operations: int = 0


class EfrsState:
    """The two arrays of one epsilon-full recovery structure."""

    def __init__(self, config: EfrsConfig):
        self.config = config
        self.bins: Tuple[Dict[int, StrictBinSketch], Dict[int, StrictBinSketch]] = ({}, {})

    def _new_cell(self) -> StrictBinSketch:
        if self.config.guard is not None:
            return NonStrictBinSketch(self.config.guard)
        return StrictBinSketch()

    def _cell(self, array: int, index: int) -> StrictBinSketch:
        bins = self.bins[array]
        cell = bins.get(index)
        if cell is None:
            cell = bins[index] = self._new_cell()
        return cell

    def locate(self, k: int) -> Tuple[int, int]:
        """Bins of ``k`` in both arrays."""
        h1, h2 = self.config.hashes
        return h1(k), h2(k)

    def insert(
        self,
        k: int,
        c: int,
        located: Optional[Tuple[int, int]] = None,
        guard_value: Optional[int] = None,
    ) -> None:
        b1, b2 = located if located is not None else self.locate(k)
        guard = self.config.guard
        if guard is None:
            self._cell(0, b1).insert(k, c, b2)
            self._cell(1, b2).insert(k, c, b1)
            return
        if guard_value is None:
            guard_value = guard(k)
        first = self._cell(0, b1)
        second = self._cell(1, b2)
        assert isinstance(first, NonStrictBinSketch) and isinstance(second, NonStrictBinSketch)
        first.insert(k, c, b2, guard_value)
        second.insert(k, c, b1, guard_value)

    def copy(self) -> "EfrsState":
        clone = EfrsState(self.config)
        clone.bins = (
            {i: cell.copy() for i, cell in self.bins[0].items()},
            {i: cell.copy() for i, cell in self.bins[1].items()},
        )
        return clone

    def merge(self, other: "EfrsState", sign: int = 1) -> "EfrsState":
        merged = self.copy()
        for mine, theirs in zip(merged.bins, other.bins):
            for index, cell in theirs.items():
                base = mine.get(index)
                mine[index] = combine(base if base is not None else merged._new_cell(), cell, sign)
        return merged

    def is_zero(self) -> bool:
        return all(cell.is_zero() for bins in self.bins for cell in bins.values())

    def nonzero_cells(self) -> Iterator[Tuple[int, int, StrictBinSketch]]:
        for a, bins in enumerate(self.bins):
            for index in sorted(bins):
                cell = bins[index]
                if not cell.is_zero():
                    yield a, index, cell

    def load_cell(self, array: int, index: int, counters: Sequence[int]) -> None:
        x, y, z, w, t = counters
        if self.config.guard is not None:
            self.bins[array][index] = NonStrictBinSketch(self.config.guard, x, y, z, w, t)
        else:
            self.bins[array][index] = StrictBinSketch(x, y, z, w)

    def recover(self) -> EfrsRecovery:
        """
        Peel every element that is not part of a fail set.

        Runs on a scratch copy. Bins whose twin position is not a whole
        in-range index are skipped and counted as anomalies.
        """
        scratch = self.copy()
        universe = self.config.universe
        width = self.config.width
        result = EfrsRecovery()

        queue: Deque[Tuple[int, int]] = deque()
        queued: Set[Tuple[int, int]] = set()
        for a, bins in enumerate(scratch.bins):
            for index in sorted(bins):
                if bins[index].classify(universe).is_single:
                    queue.append((a, index))
                    queued.add((a, index))
                    result.queue_operations += 1

        while queue:
            a, index = queue.popleft()
            queued.discard((a, index))
            result.queue_operations += 1
            cell = scratch.bins[a][index]
            verdict = cell.classify(universe)
            if not verdict.is_single:
                continue
            k, total = verdict.element
            twin, remainder = divmod(cell.w, total)
            if remainder or not 0 <= twin < width or k in result.entries:
                result.anomalies += 1
                continue

            result.entries[k] = total
            other = 1 - a
            result.twins[k] = (other, twin)
            twin_cell = scratch._cell(other, twin)
            cell.insert(k, -total, twin)
            twin_cell.insert(k, -total, index)
            if (other, twin) not in queued:
                queue.append((other, twin))
                queued.add((other, twin))
                result.queue_operations += 1

        result.residual_bins = sum(1 for _ in scratch.nonzero_cells())
        return result

