"""Estimators over exact samples."""

from .bounds import tail_bound
from .inverse import (
    InverseDistribution,
    QueryResult,
    forward_point,
    inverse_heavy_hitters,
    inverse_point,
    inverse_quantile,
    inverse_range,
)
from .jaccard import jaccard

__all__ = [
    "InverseDistribution",
    "QueryResult",
    "forward_point",
    "inverse_heavy_hitters",
    "inverse_point",
    "inverse_quantile",
    "inverse_range",
    "jaccard",
    "tail_bound",
]
