"""
Recovery structures for turnstilesampler.

Bin sketch cells, the level map, the L0 estimators and the two per-level
recovery structures (FRS and eFRS) built from them.
"""

from .bin_sketch import CellKind, NonStrictBinSketch, StrictBinSketch
from .efrs import EfrsConfig, EfrsState
from .frs import FrsConfig, FrsState
from .l0_estimate import AmplifiedEstimator, ExactDistinctCounter
from .level_map import LevelMap, LevelSelection

__all__ = [
    "AmplifiedEstimator",
    "CellKind",
    "EfrsConfig",
    "EfrsState",
    "ExactDistinctCounter",
    "FrsConfig",
    "FrsState",
    "LevelMap",
    "LevelSelection",
    "NonStrictBinSketch",
    "StrictBinSketch",
]
