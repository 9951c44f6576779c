"""
Sampler sketch: the full ingestion and extraction pipeline.

Updates are buffered and flushed in batches of t_lvl. A flushed batch
computes each key's field powers once and evaluates the level hash, the
recovery hashes and the L0 hashes from them. A flushed update is routed
to exactly one level and applied to that level's recovery structure and
to the L0 estimator. Extraction picks a level from the L0 estimate alone and
recovers it; a strict FRS level that fails to verify falls back to the
next, sparser levels.
"""

import operator
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from ..recovery.efrs import EfrsConfig, EfrsState
from ..recovery.frs import FrsConfig, FrsState
from ..recovery.l0_estimate import L0Estimator, make_l0_estimator
from ..recovery.level_map import LevelMap, LevelSelection
from ..utils.logging import LoggerMixin
from ..utils.metrics import MetricsCollector, metrics_collector
from .config import RecoveryKind, SamplerConfig
from .errors import (
    ContractViolation,
    ExtractionError,
    InputError,
    MergeError,
    ModelError,
    RecoveryFailure,
)
from .field_hash import HashFn, PointBatch, derive_seed, make_hash

# sub-seed domains of the master seed
LEVEL_DOMAIN = 0x01
ARRAY_DOMAIN = 0x02
GUARD_DOMAIN = 0x03
L0_DOMAIN = 0x04

RecoveryState = Union[FrsState, EfrsState]
StructureConfig = Union[FrsConfig, EfrsConfig]


def _as_int(value: object) -> Optional[int]:
    """Python int of an integer-like value (numpy integers included), else None."""
    if isinstance(value, bool):
        return None
    try:
        return operator.index(value)  # type: ignore[arg-type]
    except TypeError:
        return None


@dataclass
class Sample:
    """
    An exact sample with its extraction metadata.

    ``level`` is None for an empty stream. ``band`` is the size range
    [K', K~] a successful single-level extraction is expected to land in.
    """

    entries: Dict[int, int] = field(default_factory=dict)
    level: Optional[int] = None
    whole_stream: bool = False
    l0_estimate: float = 0.0
    band: Tuple[int, int] = (0, 0)
    delta: float = 0.0
    partial_error: float = 0.0
    fallback_depth: int = 0
    residual_bins: int = 0
    warnings: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, k: object) -> bool:
        return k in self.entries

    def total(self, k: int) -> Optional[int]:
        """Exact total of ``k`` if it was sampled."""
        return self.entries.get(k)

    def items(self) -> List[Tuple[int, int]]:
        return sorted(self.entries.items())

    @property
    def is_empty(self) -> bool:
        return not self.entries


class SamplerSketch(LoggerMixin):
    """
    Mergeable turnstile sampler.

    Two sketches built from the same ``SamplerConfig`` share every hash
    function, so their states can be added or subtracted cellwise.

    Args:
        config: Sketch configuration
        metrics: Metrics collector (defaults to the global one)
    """

    def __init__(self, config: SamplerConfig, metrics: Optional[MetricsCollector] = None):
        self.config = config
        self.metrics = metrics or metrics_collector
        seed = config.seed

        self.level_hash: HashFn = make_hash(
            derive_seed(seed, LEVEL_DOMAIN), config.level_hash_independence, config.level_hash_range
        )
        self.level_map = LevelMap(self.level_hash, config.decay, config.alpha)

        self.structure: StructureConfig
        if config.recovery is RecoveryKind.EFRS:
            self.structure = EfrsConfig.build(
                config.model.value,
                config.capacity,
                config.delta,
                seed,
                config.universe,
                width=config.efrs_width,
                array_domain=ARRAY_DOMAIN,
                guard_domain=GUARD_DOMAIN,
            )
        else:
            self.structure = FrsConfig.build(
                config.model.value, config.capacity, config.delta, seed, config.universe, ARRAY_DOMAIN
            )

        self.l0: L0Estimator = make_l0_estimator(
            config.l0_kind.value,
            derive_seed(seed, L0_DOMAIN),
            config.universe,
            config.delta,
            config.alpha,
            config.l0_amplification,
            config.l0_cells,
        )

        # power rows of a flushed batch serve every hash evaluated on it
        self.batch_degree = max(
            self.level_hash.independence, self.structure.independence, self.l0.independence
        )

        # level -> recovery structure, created on first use
        self.structures: Dict[int, RecoveryState] = {}
        self._buffer: List[Tuple[int, int]] = []

    def _log_context(self) -> Dict[str, Any]:
        return {
            "model": self.config.model,
            "recovery": self.config.recovery,
            "seed": self.config.seed,
        }

    @property
    def levels(self) -> int:
        return self.level_map.levels

    @property
    def pending(self) -> int:
        """Buffered updates not yet applied."""
        return len(self._buffer)

    def _new_structure(self) -> RecoveryState:
        if isinstance(self.structure, EfrsConfig):
            return EfrsState(self.structure)
        return FrsState(self.structure)

    def structure_at(self, level: int) -> RecoveryState:
        """Recovery structure of ``level``, materialized on demand."""
        state = self.structures.get(level)
        if state is None:
            state = self.structures[level] = self._new_structure()
        return state

    def _check_value(self, k: int) -> int:
        value = _as_int(k)
        if value is None or not 1 <= value < self.config.universe:
            raise InputError(f"value {k!r} outside [1, {self.config.universe})")
        return value

    def update(self, k: int, c: int) -> None:
        """
        Apply update (k, c); applied to the structures at the next flush.

        Raises:
            InputError: if k is outside [1, m) or |c| exceeds r
        """
        k = self._check_value(k)
        count = _as_int(c)
        if count is None or abs(count) > self.config.max_count:
            raise InputError(f"count {c!r} outside [-{self.config.max_count}, {self.config.max_count}]")
        if count == 0:
            return
        self._buffer.append((k, count))
        if len(self._buffer) >= self.config.level_hash_independence:
            self.flush()

    def update_many(self, updates: Iterable[Tuple[int, int]]) -> int:
        """Apply an iterable of (k, c) pairs; returns how many were read."""
        count = 0
        for k, c in updates:
            self.update(k, c)
            count += 1
        return count

    def flush(self) -> None:
        """Route every buffered update to its level."""
        if not self._buffer:
            return
        pending, self._buffer = self._buffer, []
        batch = PointBatch([k for k, _ in pending], self.batch_degree)
        hashed = self.level_hash.evaluate_batch(batch)

        if isinstance(self.structure, EfrsConfig):
            for (k, c), h, (bins, guard_value) in zip(
                pending, hashed, self.structure.locate_batch(batch)
            ):
                state = self.structure_at(self.level_map.level_of_hash(h))
                assert isinstance(state, EfrsState)
                state.insert(k, c, bins, guard_value)
        else:
            for (k, c), h, located in zip(pending, hashed, self.structure.locate_batch(batch)):
                state = self.structure_at(self.level_map.level_of_hash(h))
                assert isinstance(state, FrsState)
                state.insert(k, c, located)
        self.l0.update_batch(pending, batch)

        self.metrics.record_updates(self.config.model.value, len(pending))
        self.metrics.record_flush()
        self.logger.debug("buffer_flushed", updates=len(pending), levels=len(self.structures))

    def level_of(self, k: int) -> int:
        """Level that value ``k`` is routed to."""
        return self.level_map.level_of(self._check_value(k))

    def l0_estimate(self) -> float:
        self.flush()
        return self.l0.estimate()

    def select(self, target: Optional[int] = None) -> LevelSelection:
        """Level selection for a sample of ``target`` (default K) values."""
        return self.level_map.select_level(self.l0_estimate(), target or self.config.k)

    def extract(self, k_prime: Optional[int] = None) -> Sample:
        """
        Extract a sample of about ``k_prime`` values (default K).

        Raises:
            ContractViolation: if k_prime is not in [1, K]
            ExtractionError: if recovery failed on every fallback level
        """
        target = self.config.k if k_prime is None else k_prime
        if not 1 <= target <= self.config.k:
            raise ContractViolation(f"sample size {target} outside [1, {self.config.k}]")
        estimate = self.l0_estimate()
        selection = self.level_map.select_level(estimate, target)
        return self.extract_at(selection, target=target, l0_estimate=estimate)

    def _recover(self, selection: LevelSelection) -> Tuple[Dict[int, int], int, int]:
        """Entries, residual bins and anomalies of one selection."""
        if selection.whole_stream:
            levels = sorted(self.structures)
        else:
            assert selection.level is not None
            levels = [selection.level] if selection.level in self.structures else []

        entries: Dict[int, int] = {}
        residual = anomalies = 0
        for level in levels:
            state = self.structures[level]
            if isinstance(state, EfrsState):
                outcome = state.recover()
                entries.update(outcome.entries)
                residual += outcome.residual_bins
                anomalies += outcome.anomalies
            else:
                entries.update(state.recover())
        return entries, residual, anomalies

    def extract_at(
        self,
        selection: LevelSelection,
        target: Optional[int] = None,
        l0_estimate: Optional[float] = None,
        fallbacks: Optional[int] = None,
    ) -> Sample:
        """
        Recover an explicitly chosen level selection.

        Strict FRS recovery failures move to the next deeper level, at most
        ``fallbacks`` times (default ``max_fallbacks``).
        """
        self.flush()
        config = self.config
        target = target or config.k
        estimate = self.l0.estimate() if l0_estimate is None else l0_estimate
        sample = Sample(
            l0_estimate=estimate,
            band=(target, config.capacity),
            delta=config.delta,
            partial_error=(config.eps or 0.0) if config.recovery is RecoveryKind.EFRS else 0.0,
        )
        if selection.is_empty:
            return sample

        started = time.perf_counter()
        attempts = [selection] + [
            selection.deeper(step)
            for step in range(1, (config.max_fallbacks if fallbacks is None else fallbacks) + 1)
            if (selection.level or 0) + step < self.levels
        ]
        for depth, attempt in enumerate(attempts):
            try:
                entries, residual, anomalies = self._recover(attempt)
            except RecoveryFailure as e:
                self.metrics.record_fallback()
                self.logger.warning(
                    "recovery_failed", sketch_level=attempt.level, fallback_depth=depth, error=str(e)
                )
                continue

            sample.entries = entries
            sample.level = attempt.level
            sample.whole_stream = attempt.whole_stream
            sample.fallback_depth = depth
            sample.residual_bins = residual
            if selection.clamped and not selection.whole_stream:
                sample.warnings.append(f"level clamped to {selection.level}")
                self.logger.warning("level_clamped", sketch_level=selection.level, l0_estimate=estimate)
            if depth:
                sample.warnings.append(f"recovered at fallback depth {depth}")
            if residual:
                sample.warnings.append(f"{residual} bins left unpeeled")
            if anomalies:
                sample.warnings.append(f"{anomalies} inconsistent bins skipped")
                self.logger.warning("efrs_anomalies", sketch_level=attempt.level, anomalies=anomalies)

            self.metrics.record_extraction(
                config.recovery.value, "success", time.perf_counter() - started, len(entries)
            )
            self.logger.debug(
                "sample_extracted",
                sketch_level=sample.level,
                whole_stream=sample.whole_stream,
                l0_estimate=estimate,
                size=len(entries),
                fallback_depth=depth,
            )
            return sample

        self.metrics.record_extraction(config.recovery.value, "error", time.perf_counter() - started)
        raise ExtractionError(
            f"recovery failed at level {selection.level} and {len(attempts) - 1} fallback levels"
        )

    def compatible(self, other: "SamplerSketch") -> bool:
        return isinstance(other, SamplerSketch) and self.config == other.config

    def merge(self, other: "SamplerSketch", sign: int = 1) -> "SamplerSketch":
        """
        Sketch of this stream plus ``sign`` times the other.

        Raises:
            MergeError: if the sketches differ in configuration or seed
            ModelError: for a difference of strict-model sketches
        """
        if sign not in (1, -1):
            raise MergeError(f"sign must be +1 or -1, got {sign}")
        if not self.compatible(other):
            raise MergeError("sketches differ in configuration or seed")
        if sign == -1 and self.config.strict:
            raise ModelError("a difference of sketches needs the nonstrict model")

        other.flush()
        merged = self.copy()
        merged.flush()
        for level, state in other.structures.items():
            base = merged.structures.get(level)
            if base is None:
                base = merged._new_structure()
            merged.structures[level] = base.merge(state, sign)  # type: ignore[arg-type]
        merged.l0 = merged.l0.merge(other.l0, sign)
        return merged

    def copy(self) -> "SamplerSketch":
        """Independent copy sharing the immutable hash functions."""
        clone = object.__new__(SamplerSketch)
        clone.__dict__.update(self.__dict__)
        clone.structures = {level: state.copy() for level, state in self.structures.items()}
        clone.l0 = self.l0.copy()
        clone._buffer = list(self._buffer)
        return clone

    def is_zero(self) -> bool:
        self.flush()
        return all(state.is_zero() for state in self.structures.values())

    def get_stats(self) -> Dict[str, Any]:
        """Geometry and occupancy summary."""
        self.flush()
        structure = self.structure
        stats: Dict[str, Any] = {
            "model": self.config.model.value,
            "recovery": self.config.recovery.value,
            "k": self.config.k,
            "capacity": self.config.capacity,
            "levels": self.levels,
            "level_hash_independence": self.level_hash.independence,
            "occupied_levels": sum(1 for s in self.structures.values() if not s.is_zero()),
            "l0_estimate": self.l0.estimate(),
        }
        if isinstance(structure, FrsConfig):
            stats.update(arrays=structure.arrays, width=structure.width)
        else:
            stats.update(
                arrays=2,
                width=structure.width,
                independence=structure.independence,
                guard_range=structure.guard_range,
            )
        return stats

