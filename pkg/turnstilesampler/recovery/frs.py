"""
Full recovery structure.

tau arrays of s bins, each bin a strict bin sketch. Every value lands in
one bin per array through independent pairwise hashes, so with enough
arrays every value sits alone in at least one bin. Strict recovery peels
isolated values and verifies that nothing remains; non-strict recovery
collects candidates from the first arrays and keeps those confirmed in at
least half of the remaining arrays.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from ..core.errors import ConfigurationError, RecoveryFailure
from ..core.field_hash import HashFn, PointBatch, derive_seed, make_hash
from .bin_sketch import StrictBinSketch, combine

STRICT = "strict"
NONSTRICT = "nonstrict"


@dataclass(frozen=True)
class FrsConfig:
    """Geometry and hashes of a full recovery structure, shared by all levels."""

    mode: str
    capacity: int
    arrays: int
    width: int
    hashes: Tuple[HashFn, ...]
    candidate_arrays: int
    universe: int

    @classmethod
    def build(
        cls,
        mode: str,
        capacity: int,
        delta: float,
        seed: int,
        universe: int,
        domain: int = 0x02,
    ) -> "FrsConfig":
        """
        Size the structure for ``capacity`` values at failure probability ``delta``.

        Strict: tau = ceil(log2(K/delta)) arrays of 2K bins. Non-strict:
        tau = ceil(5 log2(K/delta)) arrays of 8K bins, of which the first
        ceil(log2(K/delta)) yield candidates.
        """
        if capacity < 1:
            raise ConfigurationError("FRS capacity must be positive")
        base = math.ceil(math.log2(capacity / delta))
        if mode == STRICT:
            arrays, width = base, 2 * capacity
        elif mode == NONSTRICT:
            arrays, width = math.ceil(5 * math.log2(capacity / delta)), 8 * capacity
        else:
            raise ConfigurationError(f"unknown stream model {mode!r}")
        arrays = max(arrays, 1)
        hashes = tuple(
            make_hash(derive_seed(seed, domain, a), 2, width) for a in range(arrays)
        )
        return cls(mode, capacity, arrays, width, hashes, max(min(base, arrays), 1), universe)

    @property
    def voting_arrays(self) -> int:
        return self.arrays - self.candidate_arrays

    @property
    def independence(self) -> int:
        return max(h.independence for h in self.hashes)

    def locate_batch(self, batch: PointBatch) -> List[Tuple[int, ...]]:
        """Bin of every batch key in every array."""
        return list(zip(*(h.evaluate_batch(batch) for h in self.hashes)))


class FrsState:
    """Bins of one full recovery structure; only touched bins are materialized."""

    def __init__(self, config: FrsConfig):
        self.config = config
        self.bins: List[Dict[int, StrictBinSketch]] = [{} for _ in range(config.arrays)]

    def insert(self, k: int, c: int, located: Optional[Sequence[int]] = None) -> None:
        if located is None:
            located = [h(k) for h in self.config.hashes]
        for bins, index in zip(self.bins, located):
            cell = bins.get(index)
            if cell is None:
                cell = bins[index] = StrictBinSketch()
            cell.insert(k, c)

    def remove(self, k: int, c: int) -> None:
        """Removing (k, c) is inserting (k, -c)."""
        self.insert(k, -c)

    def copy(self) -> "FrsState":
        clone = FrsState(self.config)
        clone.bins = [{i: cell.copy() for i, cell in bins.items()} for bins in self.bins]
        return clone

    def merge(self, other: "FrsState", sign: int = 1) -> "FrsState":
        merged = self.copy()
        for mine, theirs in zip(merged.bins, other.bins):
            for index, cell in theirs.items():
                mine[index] = combine(mine.get(index, StrictBinSketch()), cell, sign)
        return merged

    def is_zero(self) -> bool:
        return all(cell.is_zero() for bins in self.bins for cell in bins.values())

    def nonzero_cells(self) -> Iterator[Tuple[int, int, StrictBinSketch]]:
        """(array, index, cell) for every non-zero cell in canonical order."""
        for a, bins in enumerate(self.bins):
            for index in sorted(bins):
                cell = bins[index]
                if not cell.is_zero():
                    yield a, index, cell

    def load_cell(self, array: int, index: int, counters: Sequence[int]) -> None:
        x, y, z, w, _ = counters
        self.bins[array][index] = StrictBinSketch(x, y, z, w)

    def _singles(self, arrays: range) -> Iterator[Tuple[int, int]]:
        universe = self.config.universe
        for a in arrays:
            for cell in self.bins[a].values():
                verdict = cell.classify(universe)
                if verdict.is_single:
                    yield verdict.element

    def recover_strict(self) -> Dict[int, int]:
        """
        Recover every value of a strict stream.

        Works on a scratch copy: isolated values are extracted and removed
        until no new ones appear, then every bin must be empty.

        Raises:
            RecoveryFailure: if totals disagree or bins remain non-empty
        """
        scratch = self.copy()
        found: Dict[int, int] = {}
        while True:
            fresh: Dict[int, int] = {}
            for k, total in scratch._singles(range(self.config.arrays)):
                if k in found or fresh.get(k, total) != total:
                    raise RecoveryFailure(f"inconsistent totals for value {k}")
                fresh[k] = total
            if not fresh:
                break
            for k, total in fresh.items():
                scratch.remove(k, total)
            found.update(fresh)
        if not scratch.is_zero():
            raise RecoveryFailure("bins remain non-empty after recovery")
        return found

    def recover_nonstrict(self) -> Dict[int, int]:
        """
        Recover the values of a non-strict stream by majority voting.

        A (value, total) candidate from the first arrays is kept when the
        bin it hashes to classifies as that same single element in at
        least half of the remaining arrays.
        """
        config = self.config
        candidates: Set[Tuple[int, int]] = set(self._singles(range(config.candidate_arrays)))
        voters = range(config.candidate_arrays, config.arrays)
        needed = len(voters) / 2

        votes: Dict[int, List[Tuple[int, int]]] = {}
        for k, total in candidates:
            count = 0
            for a in voters:
                cell = self.bins[a].get(config.hashes[a](k))
                if cell is not None:
                    verdict = cell.classify(config.universe)
                    if verdict.is_single and verdict.element == (k, total):
                        count += 1
            if count >= needed:
                votes.setdefault(k, []).append((count, total))

        sample: Dict[int, int] = {}
        for k, ballots in votes.items():
            ballots.sort(reverse=True)
            if len(ballots) > 1 and ballots[0][0] == ballots[1][0]:
                continue  # tied totals for one value: report neither
            sample[k] = ballots[0][1]
        return sample

    def recover(self) -> Dict[int, int]:
        if self.config.mode == STRICT:
            return self.recover_strict()
        return self.recover_nonstrict()
