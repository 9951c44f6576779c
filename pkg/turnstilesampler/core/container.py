"""
Binary sketch container.

Layout (all integers little-endian)::

    "TSK1"  u16 version
    config block      u64 / f64 fields in a fixed order
    derived block     u64 geometry values, recomputed and compared on load
    u32 level count, then per level: u32 cells, sorted cell records
    L0 block          sparse cells (amplified) or sorted totals (exact)
    u32 CRC-32 of everything above

A cell record is (array u32, index u32, X, Y, Z, W, T) with each counter
16 bytes of two's complement. All-zero cells are never written, so a
state serializes the same way whatever history produced it.
"""

import struct
import zlib
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

from ..recovery.bin_sketch import COUNTER_BYTES
from ..recovery.efrs import EfrsConfig
from ..recovery.frs import FrsConfig
from ..recovery.l0_estimate import AmplifiedEstimator, ExactDistinctCounter
from ..utils.logging import get_logger
from .config import L0Kind, RecoveryKind, SamplerConfig, StreamModel, build_config
from .errors import CapacityError, ConfigurationError, ContainerError
from .sampler import SamplerSketch

logger = get_logger(__name__)

MAGIC = b"TSK1"
FORMAT_VERSION = 1

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_F64 = struct.Struct("<d")
_CELL_KEY = struct.Struct("<II")
_L0_KEY = struct.Struct("<III")

_MODELS = (StreamModel.STRICT, StreamModel.NONSTRICT)
_RECOVERIES = (RecoveryKind.FRS, RecoveryKind.EFRS)
_L0_KINDS = (L0Kind.AMPLIFIED, L0Kind.EXACT)

# (field, struct) in container order; hash_range 0 and eps 0.0 mean unset
_CONFIG_LAYOUT: Tuple[Tuple[str, struct.Struct], ...] = (
    ("model", _U64),
    ("recovery", _U64),
    ("k", _U64),
    ("delta", _F64),
    ("eps", _F64),
    ("universe", _U64),
    ("max_count", _U64),
    ("max_length", _U64),
    ("decay", _F64),
    ("alpha", _F64),
    ("hash_range", _U64),
    ("seed", _U64),
    ("l0_kind", _U64),
    ("l0_amplification", _U64),
    ("l0_cells", _U64),
    ("sample_floor", _F64),
    ("level_independence", _F64),
    ("max_fallbacks", _U64),
)


def _counter_bytes(value: int) -> bytes:
    try:
        return value.to_bytes(COUNTER_BYTES, "little", signed=True)
    except OverflowError:
        raise CapacityError(f"counter {value} exceeds {8 * COUNTER_BYTES}-bit capacity") from None


def _encode_cell(out: bytearray, key: bytes, counters: Sequence[int]) -> None:
    out += key
    for value in counters:
        out += _counter_bytes(value)


def _config_values(config: SamplerConfig) -> List[Union[int, float]]:
    return [
        _MODELS.index(config.model),
        _RECOVERIES.index(config.recovery),
        config.k,
        config.delta,
        config.eps if config.eps is not None else 0.0,
        config.universe,
        config.max_count,
        config.max_length,
        config.decay,
        config.alpha,
        config.hash_range or 0,
        config.seed,
        _L0_KINDS.index(config.l0_kind),
        config.l0_amplification,
        config.l0_cells,
        config.sample_floor,
        config.level_independence,
        config.max_fallbacks,
    ]


def derived_geometry(sketch: SamplerSketch) -> Tuple[int, ...]:
    """(L, t_lvl, arrays, width, independence, guard range, L0 instances)."""
    structure = sketch.structure
    if isinstance(structure, FrsConfig):
        arrays, width, independence, guard = structure.arrays, structure.width, 2, 0
    else:
        arrays, width = 2, structure.width
        independence, guard = structure.independence, structure.guard_range
    instances = sketch.l0.instances if isinstance(sketch.l0, AmplifiedEstimator) else 0
    return (
        sketch.levels,
        sketch.level_hash.independence,
        arrays,
        width,
        independence,
        guard,
        instances,
    )


def dumps(sketch: SamplerSketch) -> bytes:
    """Serialize a sketch; pending updates are flushed first."""
    sketch.flush()
    out = bytearray(MAGIC)
    out += _U16.pack(FORMAT_VERSION)
    for (_, fmt), value in zip(_CONFIG_LAYOUT, _config_values(sketch.config)):
        out += fmt.pack(value)
    for value in derived_geometry(sketch):
        out += _U64.pack(value)

    out += _U32.pack(sketch.levels)
    for level in range(sketch.levels):
        state = sketch.structures.get(level)
        cells = list(state.nonzero_cells()) if state is not None else []
        out += _U32.pack(len(cells))
        for array, index, cell in cells:
            _encode_cell(out, _CELL_KEY.pack(array, index), cell.counters())

    l0 = sketch.l0
    if isinstance(l0, AmplifiedEstimator):
        l0_cells = list(l0.nonzero_cells())
        out += _U32.pack(len(l0_cells))
        for key, cell in l0_cells:
            _encode_cell(out, _L0_KEY.pack(*key), cell.counters())
    else:
        assert isinstance(l0, ExactDistinctCounter)
        totals = l0.items()
        out += _U32.pack(len(totals))
        for k, total in totals:
            out += _U64.pack(k) + _counter_bytes(total)

    out += _U32.pack(zlib.crc32(out))
    return bytes(out)


class _Reader:
    """Bounds-checked cursor over a container body."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise ContainerError(f"container truncated at byte {self.offset}")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: struct.Struct) -> Tuple:
        return fmt.unpack(self.take(fmt.size))

    def u32(self) -> int:
        return self.unpack(_U32)[0]

    def counters(self) -> Tuple[int, ...]:
        return tuple(
            int.from_bytes(self.take(COUNTER_BYTES), "little", signed=True) for _ in range(5)
        )


def _decode_config(reader: _Reader) -> SamplerConfig:
    raw = {name: reader.unpack(fmt)[0] for name, fmt in _CONFIG_LAYOUT}
    try:
        raw["model"] = _MODELS[raw["model"]]
        raw["recovery"] = _RECOVERIES[raw["recovery"]]
        raw["l0_kind"] = _L0_KINDS[raw["l0_kind"]]
    except IndexError:
        raise ContainerError("unknown model, recovery or L0 kind code") from None
    if raw["recovery"] is not RecoveryKind.EFRS or raw["eps"] == 0.0:
        raw["eps"] = None
    if raw["hash_range"] == 0:
        raw["hash_range"] = None
    try:
        return build_config(**raw)
    except ConfigurationError as e:
        raise ContainerError(f"stored configuration is invalid: {e}") from e


def _load_cells(reader: _Reader, count: int, key: struct.Struct) -> Iterator[Tuple[Tuple, Tuple[int, ...]]]:
    previous = None
    for _ in range(count):
        position = reader.unpack(key)
        if previous is not None and position <= previous:
            raise ContainerError("cell records are not in canonical order")
        previous = position
        yield position, reader.counters()


def loads(data: bytes) -> SamplerSketch:
    """
    Rebuild a sketch from container bytes.

    Raises:
        ContainerError: on bad magic, version, CRC, geometry or layout
    """
    if len(data) < len(MAGIC) + _U16.size + _U32.size:
        raise ContainerError("container too short")
    body, trailer = data[:-_U32.size], data[-_U32.size:]
    if _U32.unpack(trailer)[0] != zlib.crc32(body):
        raise ContainerError("CRC-32 mismatch")

    reader = _Reader(body)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ContainerError("not a sketch container (bad magic)")
    version = reader.unpack(_U16)[0]
    if version != FORMAT_VERSION:
        raise ContainerError(f"unsupported container version {version}")

    config = _decode_config(reader)
    sketch = SamplerSketch(config)

    stored = tuple(reader.unpack(_U64)[0] for _ in range(7))
    expected = derived_geometry(sketch)
    if stored != expected:
        raise ContainerError(f"stored geometry {stored} differs from recomputed {expected}")

    levels = reader.u32()
    if levels != sketch.levels:
        raise ContainerError(f"container holds {levels} levels, configuration implies {sketch.levels}")
    arrays = expected[2]
    width = expected[3]
    guarded = isinstance(sketch.structure, EfrsConfig) and sketch.structure.guard is not None
    for level in range(levels):
        count = reader.u32()
        if not count:
            continue
        state = sketch.structure_at(level)
        for (array, index), counters in _load_cells(reader, count, _CELL_KEY):
            if array >= arrays or index >= width:
                raise ContainerError(f"cell ({array}, {index}) outside level geometry")
            if not guarded and counters[4]:
                raise ContainerError("strict cell carries a guard counter")
            state.load_cell(array, index, counters)

    l0 = sketch.l0
    count = reader.u32()
    if isinstance(l0, AmplifiedEstimator):
        for key, counters in _load_cells(reader, count, _L0_KEY):
            instance, depth, cell = key
            if instance >= l0.instances or depth >= l0.depths or cell >= l0.cells:
                raise ContainerError(f"L0 cell {key} outside estimator geometry")
            l0.load_cell(key, counters)
    else:
        assert isinstance(l0, ExactDistinctCounter)
        previous = 0
        for _ in range(count):
            k = reader.unpack(_U64)[0]
            total = int.from_bytes(reader.take(COUNTER_BYTES), "little", signed=True)
            if k <= previous or total == 0:
                raise ContainerError("exact L0 totals are not canonical")
            previous = k
            l0.totals[k] = total

    if reader.offset != len(body):
        raise ContainerError(f"{len(body) - reader.offset} trailing bytes after L0 block")
    return sketch


def save(sketch: SamplerSketch, path: Union[str, Path]) -> int:
    """Write ``sketch`` to ``path``; returns the byte count."""
    data = dumps(sketch)
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise ContainerError(f"cannot write {path}: {e.strerror}") from e
    logger.debug("container_saved", path=str(path), size=len(data))
    return len(data)


def load(path: Union[str, Path]) -> SamplerSketch:
    """Read a sketch container from ``path``."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ContainerError(f"cannot read {path}: {e.strerror}") from e
    return loads(data)
