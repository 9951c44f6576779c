"""
L0 (Hamming norm) estimation.

Two mergeable estimators share one interface:

* ``AmplifiedEstimator`` splits the value universe over tau instances of a
  geometric bit-sampling estimator with a hash g: [m] -> [tau] and reports
  tau times the median instance estimate. Each instance keeps, per
  sampling depth, a row of non-strict bin sketch cells and estimates the
  number of occupied cells by linear counting. The reported value is
  scaled by sqrt(alpha) so that a relative error within sqrt(alpha) lands
  in [L0, alpha * L0].
* ``ExactDistinctCounter`` keeps every total; it is the reference oracle.
"""

import math
from abc import ABC, abstractmethod
from typing import Dict, Iterable, Iterator, List, Tuple

import numpy as np

from ..core.errors import MergeError
from ..core.field_hash import PointBatch, derive_seed, make_hash
from .bin_sketch import NonStrictBinSketch, combine

# sub-seed domains inside the L0 seed
_SPLIT_DOMAIN = 0x41
_DEPTH_DOMAIN = 0x42
_CELL_DOMAIN = 0x43
_GUARD_DOMAIN = 0x44

GUARD_RANGE = 1 << 32
OCCUPANCY_LIMIT = 0.7
SMALL_INSTANCE_LOAD = 32


class L0Estimator(ABC):
    """Mergeable estimator of the number of values with non-zero total."""

    alpha: float = 1.0
    delta: float = 0.0

    @abstractmethod
    def update(self, k: int, c: int) -> None:
        """Apply one stream update."""

    def update_batch(self, updates: Iterable[Tuple[int, int]], batch: PointBatch) -> None:
        """Apply updates whose keys make up ``batch``, in order."""
        for k, c in updates:
            self.update(k, c)

    @property
    def independence(self) -> int:
        """Highest hash independence the estimator evaluates on a batch."""
        return 1

    @abstractmethod
    def estimate(self) -> float:
        """Current estimate of L0."""

    @abstractmethod
    def merge(self, other: "L0Estimator", sign: int = 1) -> "L0Estimator":
        """Estimator of this stream plus ``sign`` times the other stream."""

    @abstractmethod
    def copy(self) -> "L0Estimator":
        """Independent deep copy."""


class ExactDistinctCounter(L0Estimator):
    """Reference estimator: exact totals, linear memory."""

    def __init__(self) -> None:
        self.totals: Dict[int, int] = {}

    def update(self, k: int, c: int) -> None:
        total = self.totals.get(k, 0) + c
        if total:
            self.totals[k] = total
        else:
            self.totals.pop(k, None)

    def estimate(self) -> float:
        return float(len(self.totals))

    def merge(self, other: L0Estimator, sign: int = 1) -> "ExactDistinctCounter":
        if not isinstance(other, ExactDistinctCounter):
            raise MergeError("cannot merge exact and amplified L0 estimators")
        merged = self.copy()
        for k, c in other.totals.items():
            merged.update(k, sign * c)
        return merged

    def copy(self) -> "ExactDistinctCounter":
        clone = ExactDistinctCounter()
        clone.totals = dict(self.totals)
        return clone

    def items(self) -> List[Tuple[int, int]]:
        return sorted(self.totals.items())


def _linear_count(occupied: int, cells: int) -> float:
    occupied = min(occupied, cells - 1)
    return -cells * math.log(1.0 - occupied / cells)


class AmplifiedEstimator(L0Estimator):
    """
    Median-amplified bit-sampling L0 estimator.

    Args:
        seed: Seed disjoint from the level hash seed
        universe: Values lie in [1, universe)
        delta: Failure probability; fixes the instance count
        alpha: Approximation factor of the contract L0 <= estimate <= alpha * L0
        amplification: c_amp in tau = ceil(c_amp * log2(1/delta))
        cells: Cells per sampling depth
    """

    def __init__(
        self,
        seed: int,
        universe: int,
        delta: float,
        alpha: float = 1.5,
        amplification: int = 4,
        cells: int = 64,
    ):
        self.seed = seed
        self.universe = universe
        self.delta = delta
        self.alpha = alpha
        self.cells = cells
        self.instances = max(1, math.ceil(amplification * math.log2(1.0 / delta)))
        self.depths = max(1, (universe - 1).bit_length())

        split_t = max(2, math.ceil(2 * math.log2(1.0 / delta)))
        self.split_hash = make_hash(derive_seed(seed, _SPLIT_DOMAIN), split_t, self.instances)
        self.depth_hash = make_hash(derive_seed(seed, _DEPTH_DOMAIN), 2, 1 << self.depths)
        self.cell_hash = make_hash(derive_seed(seed, _CELL_DOMAIN), 2, cells)
        self.guard = make_hash(derive_seed(seed, _GUARD_DOMAIN), split_t, GUARD_RANGE)

        # sparse: (instance, depth, cell) -> cell sketch
        self._cells: Dict[Tuple[int, int, int], NonStrictBinSketch] = {}

    @property
    def rows(self) -> int:
        return self.instances * self.depths

    def _depth_of(self, hashed: int) -> int:
        if hashed == 0:
            return self.depths - 1
        return min(self.depths - hashed.bit_length(), self.depths - 1)

    @property
    def independence(self) -> int:
        hashes = (self.split_hash, self.depth_hash, self.cell_hash, self.guard)
        return max(h.independence for h in hashes)

    def _insert(self, key: Tuple[int, int, int], k: int, c: int, guard_value: int) -> None:
        cell = self._cells.get(key)
        if cell is None:
            cell = self._cells[key] = NonStrictBinSketch(self.guard)
        cell.insert(k, c, guard_value=guard_value)

    def update(self, k: int, c: int) -> None:
        key = (self.split_hash(k), self._depth_of(self.depth_hash(k)), self.cell_hash(k))
        self._insert(key, k, c, self.guard(k))

    def update_batch(self, updates: Iterable[Tuple[int, int]], batch: PointBatch) -> None:
        columns = zip(
            updates,
            self.split_hash.evaluate_batch(batch),
            self.depth_hash.evaluate_batch(batch),
            self.cell_hash.evaluate_batch(batch),
            self.guard.evaluate_batch(batch),
        )
        for (k, c), instance, hashed, index, guard_value in columns:
            self._insert((instance, self._depth_of(hashed), index), k, c, guard_value)

    def _occupancy(self) -> np.ndarray:
        occupied = np.zeros((self.instances, self.depths), dtype=np.int64)
        for (instance, depth, _), cell in self._cells.items():
            if not cell.is_zero():
                occupied[instance, depth] += 1
        return occupied

    def instance_estimates(self) -> np.ndarray:
        """Raw (unscaled) estimate of each instance."""
        occupied = self._occupancy()
        limit = OCCUPANCY_LIMIT * self.cells
        raw = np.zeros(self.instances, dtype=np.float64)
        for instance in range(self.instances):
            row = occupied[instance]
            start = 0
            while start < self.depths - 1 and row[start] > limit:
                start += 1
            counted = sum(_linear_count(int(n), self.cells) for n in row[start:])
            raw[instance] = counted * (1 << start)
        return raw

    def estimate(self) -> float:
        """
        tau times the median instance estimate, scaled by sqrt(alpha).

        While the instances together count fewer than
        ``SMALL_INSTANCE_LOAD`` values per instance, most instances sit
        near zero and their median says little; the sum of the instance
        estimates is reported instead, with the same scaling.
        """
        raw = self.instance_estimates()
        total = float(raw.sum())
        if total == 0.0:
            return 0.0
        scale = math.sqrt(self.alpha)
        if total < SMALL_INSTANCE_LOAD * self.instances:
            # too few values for every instance to be loaded; the sum is sharper
            return total * scale
        return float(self.instances * np.median(raw)) * scale

    def compatible(self, other: "AmplifiedEstimator") -> bool:
        return (
            self.seed == other.seed
            and self.universe == other.universe
            and self.instances == other.instances
            and self.cells == other.cells
            and self.alpha == other.alpha
        )

    def merge(self, other: L0Estimator, sign: int = 1) -> "AmplifiedEstimator":
        if not isinstance(other, AmplifiedEstimator) or not self.compatible(other):
            raise MergeError("L0 estimators differ in configuration or seed")
        merged = self.copy()
        for key, cell in other._cells.items():
            mine = merged._cells.get(key)
            if mine is None:
                mine = NonStrictBinSketch(merged.guard)
            merged._cells[key] = combine(mine, cell, sign)  # type: ignore[assignment]
        return merged

    def copy(self) -> "AmplifiedEstimator":
        clone = object.__new__(AmplifiedEstimator)
        clone.__dict__.update(self.__dict__)
        clone._cells = {key: cell.copy() for key, cell in self._cells.items()}
        return clone

    def nonzero_cells(self) -> Iterator[Tuple[Tuple[int, int, int], NonStrictBinSketch]]:
        """Non-zero cells in canonical (instance, depth, cell) order."""
        for key in sorted(self._cells):
            cell = self._cells[key]
            if not cell.is_zero():
                yield key, cell

    def load_cell(self, key: Tuple[int, int, int], counters: Tuple[int, ...]) -> None:
        x, y, z, w, t = counters
        self._cells[key] = NonStrictBinSketch(self.guard, x, y, z, w, t)


def make_l0_estimator(
    kind: str,
    seed: int,
    universe: int,
    delta: float,
    alpha: float,
    amplification: int = 4,
    cells: int = 64,
) -> L0Estimator:
    """Build the configured L0 estimator (``amplified`` or ``exact``)."""
    if kind == "exact":
        estimator: L0Estimator = ExactDistinctCounter()
        estimator.alpha = alpha
        estimator.delta = delta
        return estimator
    return AmplifiedEstimator(seed, universe, delta, alpha, amplification, cells)
