"""
Bin sketch cells.

A cell keeps exact integer moments of the updates routed to it:

    X = sum c,  Y = sum c*k,  Z = sum c*k^2

plus, when embedded in the two-array recovery structure, W = sum c*h_other(k)
(the position of each element in the other array), and for non-strict
streams T = sum c*h_T(k) for a hash shared by every cell of a structure.
A cell holding exactly one value k with total C satisfies X*Z == Y^2 and
gives k = Y/X, C = X. The T counter rejects the multi-element contents
whose moments happen to look like a single element.

Cells are linear: adding two cells counterwise gives the cell of the
concatenated substreams, whatever the update order.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from ..core.errors import CapacityError, MergeError
from ..core.field_hash import HashFn

COUNTER_BYTES = 16
COUNTER_LIMIT = 1 << (8 * COUNTER_BYTES - 1)  # signed 128-bit magnitude bound


class CellKind(Enum):
    """What a cell is found to hold."""
    EMPTY = "empty"
    SINGLE = "single"
    COLLISION = "collision"


@dataclass(frozen=True)
class CellVerdict:
    """Classification of one cell; ``value``/``total`` set only for SINGLE."""
    kind: CellKind
    value: int = 0
    total: int = 0

    @property
    def is_single(self) -> bool:
        return self.kind is CellKind.SINGLE

    @property
    def element(self) -> Tuple[int, int]:
        return self.value, self.total


EMPTY = CellVerdict(CellKind.EMPTY)
COLLISION = CellVerdict(CellKind.COLLISION)


def admit_capacity(universe: int, max_count: int, max_length: int, *ranges: int) -> None:
    """
    Reject configurations whose counters could leave the 128-bit capacity.

    The bound is the worst case over ``max_length`` updates of magnitude
    ``max_count``: Z grows with value^2, W and T with the hash ranges.

    Raises:
        CapacityError: if any counter could reach 2^127
    """
    mass = max_length * max_count
    worst = {"Z": mass * universe * universe}
    for i, bound in enumerate(ranges):
        worst[f"hashed[{i}]"] = mass * bound
    for name, magnitude in worst.items():
        if magnitude >= COUNTER_LIMIT:
            raise CapacityError(
                f"counter {name} may reach {magnitude.bit_length()} bits; "
                f"lower the universe, count bound or stream length"
            )


def _single_value(x: int, y: int, z: int, universe: int) -> Optional[int]:
    if x == 0 or y == 0 or z == 0 or x * z != y * y:
        return None
    value, remainder = divmod(y, x)
    if remainder or not 1 <= value < universe:
        return None
    return value


class StrictBinSketch:
    """Cell for strict turnstile streams: X, Y, Z and the twin-position counter W."""

    __slots__ = ("x", "y", "z", "w")

    def __init__(self, x: int = 0, y: int = 0, z: int = 0, w: int = 0):
        self.x = x
        self.y = y
        self.z = z
        self.w = w

    def insert(self, k: int, c: int, other: Optional[int] = None) -> None:
        self.x += c
        self.y += c * k
        self.z += c * k * k
        if other is not None:
            self.w += c * other

    def is_zero(self) -> bool:
        return not (self.x or self.y or self.z or self.w)

    def classify(self, universe: int) -> CellVerdict:
        return classify_strict(self, universe)

    def counters(self) -> Tuple[int, int, int, int, int]:
        return self.x, self.y, self.z, self.w, 0

    def copy(self) -> "StrictBinSketch":
        return StrictBinSketch(self.x, self.y, self.z, self.w)

    def combine(self, other: "StrictBinSketch", sign: int = 1) -> "StrictBinSketch":
        return combine(self, other, sign)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StrictBinSketch):
            return NotImplemented
        return self.counters() == other.counters()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(x={self.x}, y={self.y}, z={self.z}, w={self.w})"


class NonStrictBinSketch(StrictBinSketch):
    """Cell for non-strict streams: adds T = sum c*h_T(k) over a shared hash."""

    __slots__ = ("t", "guard")

    def __init__(
        self,
        guard: HashFn,
        x: int = 0,
        y: int = 0,
        z: int = 0,
        w: int = 0,
        t: int = 0,
    ):
        super().__init__(x, y, z, w)
        self.guard = guard
        self.t = t

    def insert(
        self,
        k: int,
        c: int,
        other: Optional[int] = None,
        guard_value: Optional[int] = None,
    ) -> None:
        super().insert(k, c, other)
        self.t += c * (self.guard(k) if guard_value is None else guard_value)

    def is_zero(self) -> bool:
        return not (self.x or self.y or self.z or self.w or self.t)

    def classify(self, universe: int) -> CellVerdict:
        return classify_nonstrict(self, universe)

    def counters(self) -> Tuple[int, int, int, int, int]:
        return self.x, self.y, self.z, self.w, self.t

    def copy(self) -> "NonStrictBinSketch":
        return NonStrictBinSketch(self.guard, self.x, self.y, self.z, self.w, self.t)

    def __repr__(self) -> str:
        return (
            f"NonStrictBinSketch(x={self.x}, y={self.y}, z={self.z}, "
            f"w={self.w}, t={self.t})"
        )


def classify_strict(cell: StrictBinSketch, universe: int) -> CellVerdict:
    """
    Classify a cell built from a strict stream.

    Args:
        cell: The cell
        universe: Values are admissible in [1, universe)

    Returns:
        EMPTY when X == 0, SINGLE(k, C) when the moments identify one
        admissible value, COLLISION otherwise
    """
    if cell.x == 0:
        return EMPTY
    value = _single_value(cell.x, cell.y, cell.z, universe)
    if value is None:
        return COLLISION
    return CellVerdict(CellKind.SINGLE, value, cell.x)


def classify_nonstrict(cell: NonStrictBinSketch, universe: int) -> CellVerdict:
    """
    Classify a cell built from a non-strict stream.

    EMPTY needs every counter at zero; SINGLE additionally needs
    T == X * h_T(k).
    """
    if cell.x == 0 and cell.y == 0 and cell.z == 0 and cell.t == 0:
        return EMPTY
    value = _single_value(cell.x, cell.y, cell.z, universe)
    if value is None or cell.t != cell.x * cell.guard(value):
        return COLLISION
    return CellVerdict(CellKind.SINGLE, value, cell.x)


def combine(a: StrictBinSketch, b: StrictBinSketch, sign: int = 1) -> StrictBinSketch:
    """
    Counterwise ``a + sign * b``.

    Raises:
        MergeError: if the cells are of different kinds or use different guard hashes
    """
    if sign not in (1, -1):
        raise MergeError(f"sign must be +1 or -1, got {sign}")
    if type(a) is not type(b):
        raise MergeError("cannot combine strict and non-strict cells")
    if isinstance(a, NonStrictBinSketch):
        assert isinstance(b, NonStrictBinSketch)
        if not a.guard.same_function(b.guard):
            raise MergeError("cells use different guard hash functions")
        return NonStrictBinSketch(
            a.guard,
            a.x + sign * b.x,
            a.y + sign * b.y,
            a.z + sign * b.z,
            a.w + sign * b.w,
            a.t + sign * b.t,
        )
    return StrictBinSketch(
        a.x + sign * b.x,
        a.y + sign * b.y,
        a.z + sign * b.z,
        a.w + sign * b.w,
    )
