"""
Inverse-distribution queries over an exact sample.

The inverse distribution maps a frequency i to the fraction of distinct
surviving values whose total is exactly i. On a sample S it is estimated
by |{k in S : C_k = i}| / |S|, which is within an additive epsilon of the
truth when |S| >= 4/eps^2 * ln(1/delta).
"""

import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Union

import numpy as np

from ..core.errors import ContractViolation, EstimationError
from ..core.sampler import Sample


@dataclass(frozen=True)
class QueryResult:
    """A query answer with its additive error bound."""
    value: Union[float, int, FrozenSet[int]]
    error_bound: float


def point_error(size: int, delta: float) -> float:
    """Additive error of a point estimate from ``size`` samples: 2 sqrt(ln(1/delta) / size)."""
    if size <= 0:
        return math.inf
    return 2.0 * math.sqrt(math.log(1.0 / delta) / size)


def error_bound(sample: Sample) -> float:
    """Point error plus the partial-recovery loss of eFRS samples."""
    return point_error(len(sample), sample.delta) + sample.partial_error


class InverseDistribution:
    """
    Empirical inverse distribution of a sample.

    Attributes:
        frequencies: Observed totals, ascending
        fractions: Share of sampled values with each total
    """

    def __init__(self, sample: Sample):
        if sample.is_empty:
            raise EstimationError("inverse distribution of an empty sample is undefined")
        totals = np.fromiter(sample.entries.values(), dtype=np.int64, count=len(sample))
        self.frequencies, counts = np.unique(totals, return_counts=True)
        self.fractions = counts / float(len(sample))
        self.cumulative = np.cumsum(self.fractions)
        self.size = len(sample)
        self.error_bound = error_bound(sample)

    def point(self, i: int) -> float:
        position = int(np.searchsorted(self.frequencies, i))
        if position < len(self.frequencies) and self.frequencies[position] == i:
            return float(self.fractions[position])
        return 0.0

    def range(self, lo: int, hi: int) -> float:
        mask = (self.frequencies >= lo) & (self.frequencies <= hi)
        return float(self.fractions[mask].sum())

    def heavy_hitters(self, phi: float) -> FrozenSet[int]:
        return frozenset(int(i) for i in self.frequencies[self.fractions >= phi])

    def quantile(self, phi: float) -> int:
        # tolerance absorbs cumulative rounding at exact fractions
        position = int(np.searchsorted(self.cumulative, phi - 1e-12, side="left"))
        return int(self.frequencies[min(position, len(self.frequencies) - 1)])

    def as_dict(self) -> dict:
        return {int(i): float(f) for i, f in zip(self.frequencies, self.fractions)}


def inverse_point(sample: Sample, i: int) -> QueryResult:
    """
    Estimate f^-1(i).

    Raises:
        ContractViolation: if i is 0
        EstimationError: on an empty sample
    """
    if i == 0:
        raise ContractViolation("frequency 0 is not part of the inverse distribution")
    dist = InverseDistribution(sample)
    return QueryResult(dist.point(i), dist.error_bound)


def inverse_range(sample: Sample, lo: int, hi: int) -> QueryResult:
    """Estimate the fraction of values whose total lies in [lo, hi]."""
    if lo > hi:
        raise ContractViolation(f"empty frequency range [{lo}, {hi}]")
    dist = InverseDistribution(sample)
    return QueryResult(dist.range(lo, hi), dist.error_bound)


def inverse_heavy_hitters(sample: Sample, phi: float) -> QueryResult:
    """Frequencies shared by at least a ``phi`` fraction of the values."""
    if phi <= 0:
        raise ContractViolation(f"phi must be positive, got {phi}")
    dist = InverseDistribution(sample)
    return QueryResult(dist.heavy_hitters(phi), dist.error_bound)


def inverse_quantile(sample: Sample, phi: float) -> QueryResult:
    """Smallest frequency whose cumulative share, by ascending frequency, reaches ``phi``."""
    if not 0.0 < phi <= 1.0:
        raise ContractViolation(f"phi must lie in (0, 1], got {phi}")
    dist = InverseDistribution(sample)
    return QueryResult(dist.quantile(phi), dist.error_bound)


def forward_point(sample: Sample, k: int) -> Optional[int]:
    """Exact total of ``k`` when it was sampled, else None."""
    return sample.total(k)
