"""
Seeded t-wise independent hash functions over GF(2^61 - 1).

A hash function is a random polynomial of degree t-1 over the Mersenne
prime field, reduced into an output range with a plain ``mod R``. The
coefficients are expanded from a 64-bit seed by a SplitMix64 counter
generator, so identical (seed, t, R) triples give identical functions on
every platform; serialized sketches only store seeds.

Batches of points are evaluated with a subproduct tree: products of linear
factors are built with Karatsuba multiplication and the polynomial is
remaindered down the tree by Newton-inverse division, a subquadratic number
of field operations for t points. Tiny batches fall back to Horner's rule.

Ingestion evaluates many hash functions on the same keys, so it uses a
``PointBatch`` instead: each key's powers x^0..x^(d-1) are computed once and
every hash is a dot product of its coefficients with that row.
"""

from dataclasses import dataclass, field
from itertools import zip_longest
from operator import mul
from typing import Iterator, List, Sequence, Tuple

from .errors import ConfigurationError, ContractViolation

FIELD_PRIME = (1 << 61) - 1  # 2^61 - 1

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB

MULTIPOINT_MIN_BATCH = 16
KARATSUBA_CUTOFF = 16


@dataclass(frozen=True)
class PrimeField:
    """The prime field every hash polynomial lives in."""

    p: int = FIELD_PRIME

    def contains(self, value: int) -> bool:
        return 0 <= value < self.p


FIELD = PrimeField()


def _reduce(x: int) -> int:
    """x mod p for x >= 0, folding the high bits onto the low 61."""
    while x > FIELD_PRIME:
        x = (x & FIELD_PRIME) + (x >> 61)
    return 0 if x == FIELD_PRIME else x


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX_1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_2) & _MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int, index: int) -> int:
    """Output number ``index`` of the SplitMix64 stream started at ``seed``."""
    return _mix64((seed + (index + 1) * _GOLDEN_GAMMA) & _MASK64)


def splitmix64_stream(seed: int) -> Iterator[int]:
    """Infinite SplitMix64 output stream for ``seed``."""
    index = 0
    while True:
        yield splitmix64(seed, index)
        index += 1


def derive_seed(master: int, domain: int, index: int = 0) -> int:
    """
    Derive an independent sub-seed from a master seed.

    Args:
        master: 64-bit master seed
        domain: Small integer naming the consumer (level hash, arrays, ...)
        index: Position within the domain (array number, instance number)

    Returns:
        64-bit sub-seed
    """
    return splitmix64(splitmix64(master & _MASK64, domain), index)


def _field_elements(seed: int, count: int) -> Tuple[int, ...]:
    values: List[int] = []
    for word in splitmix64_stream(seed):
        candidate = word >> 3  # 61 random bits
        if candidate < FIELD_PRIME:
            values.append(candidate)
            if len(values) == count:
                break
    return tuple(values)


@dataclass(frozen=True)
class HashFn:
    """
    A polynomial hash function h(x) = (sum c_i x^i mod p) mod R.

    ``coefficients[i]`` multiplies ``x**i``; the independence degree is the
    number of coefficients.
    """

    coefficients: Tuple[int, ...]
    range: int
    seed: int = 0
    _horner: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise ConfigurationError("hash function needs at least one coefficient")
        if not 1 <= self.range <= FIELD_PRIME:
            raise ConfigurationError(f"hash range {self.range} outside [1, p]")
        if any(not FIELD.contains(c) for c in self.coefficients):
            raise ConfigurationError("hash coefficients must lie in [0, p)")
        object.__setattr__(self, "_horner", tuple(reversed(self.coefficients)))

    @property
    def independence(self) -> int:
        return len(self.coefficients)

    def field_value(self, x: int) -> int:
        """Polynomial value in the field, before range reduction."""
        acc = 0
        for c in self._horner:
            acc = (acc * x + c) % FIELD_PRIME
        return acc

    def __call__(self, x: int) -> int:
        acc = 0
        for c in self._horner:
            acc = (acc * x + c) % FIELD_PRIME
        return acc % self.range

    def evaluate(self, x: int) -> int:
        if not FIELD.contains(x):
            raise ContractViolation(f"hash input {x} outside [0, p)")
        return self(x)

    def evaluate_many(self, xs: Sequence[int]) -> List[int]:
        """Evaluate any number of points, ``independence`` points per batch."""
        out: List[int] = []
        step = self.independence
        for start in range(0, len(xs), step):
            out.extend(multipoint_eval(self, xs[start:start + step]))
        return out

    def evaluate_batch(self, batch: "PointBatch") -> List[int]:
        """Values on every key of a prepared batch."""
        if self.independence > batch.degree:
            raise ContractViolation(
                f"batch rows of degree {batch.degree} cannot evaluate t={self.independence}"
            )
        coefficients, range_ = self.coefficients, self.range
        return [_reduce(sum(map(mul, coefficients, row))) % range_ for row in batch.rows]

    def same_function(self, other: "HashFn") -> bool:
        return self.coefficients == other.coefficients and self.range == other.range


def make_hash(seed: int, t: int, range: int) -> HashFn:
    """
    Build a t-wise independent hash function into [0, range).

    Args:
        seed: 64-bit seed; coefficients are derived from it deterministically
        t: Independence degree (number of polynomial coefficients)
        range: Output range R

    Returns:
        The seeded hash function

    Raises:
        ConfigurationError: if t or range are out of bounds
    """
    if not 1 <= t < FIELD_PRIME:
        raise ConfigurationError(f"independence t={t} must satisfy 1 <= t < p")
    if not 1 <= range < FIELD_PRIME:
        raise ConfigurationError(f"hash range R={range} must satisfy 1 <= R < p")
    seed &= _MASK64
    return HashFn(coefficients=_field_elements(seed, t), range=range, seed=seed)


def power_row(x: int, length: int) -> Tuple[int, ...]:
    """(x^0, x^1, ..., x^(length-1)) in the field."""
    row = [1]
    acc = 1
    for _ in range(length - 1):
        acc = acc * x % FIELD_PRIME
        row.append(acc)
    return tuple(row)


class PointBatch:
    """
    Keys of one ingestion batch with their power rows.

    Every hash of independence at most ``degree`` is evaluated on the batch
    by ``HashFn.evaluate_batch`` without recomputing powers.

    Raises:
        ContractViolation: if a key lies outside the field
    """

    __slots__ = ("keys", "degree", "rows")

    def __init__(self, keys: Sequence[int], degree: int):
        for x in keys:
            if not FIELD.contains(x):
                raise ContractViolation(f"hash input {x} outside [0, p)")
        self.keys = list(keys)
        self.degree = degree
        self.rows = [power_row(x, degree) for x in self.keys]

    def __len__(self) -> int:
        return len(self.keys)


def evaluate(h: HashFn, x: int) -> int:
    """Single-point evaluation by Horner's rule."""
    return h.evaluate(x)


# -- polynomial arithmetic over GF(p), coefficient lists in ascending order --

def _schoolbook_mul(a: Sequence[int], b: Sequence[int]) -> List[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return [_reduce(c) for c in out]


def _karatsuba(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """Product of two equal-length polynomials, 2n - 1 coefficients."""
    n = len(a)
    if n <= KARATSUBA_CUTOFF:
        return _schoolbook_mul(a, b)
    half = n // 2
    low_a, high_a = a[:half], a[half:]
    low_b, high_b = b[:half], b[half:]
    z0 = _karatsuba(low_a, low_b)
    z2 = _karatsuba(high_a, high_b)
    z1 = _karatsuba(
        [x + y for x, y in zip_longest(low_a, high_a, fillvalue=0)],
        [x + y for x, y in zip_longest(low_b, high_b, fillvalue=0)],
    )
    out = [0] * (2 * n - 1)
    for i, c in enumerate(z0):
        out[i] += c
        out[i + half] -= c
    for i, c in enumerate(z2):
        out[i + 2 * half] += c
        out[i + half] -= c
    for i, c in enumerate(z1):
        out[i + half] += c
    return [c % FIELD_PRIME for c in out]


def _poly_mul(a: Sequence[int], b: Sequence[int]) -> List[int]:
    if not a or not b:
        return []
    if min(len(a), len(b)) <= KARATSUBA_CUTOFF:
        return _schoolbook_mul(a, b)
    n = max(len(a), len(b))
    padded_a = list(a) + [0] * (n - len(a))
    padded_b = list(b) + [0] * (n - len(b))
    return _karatsuba(padded_a, padded_b)[: len(a) + len(b) - 1]


def _series_inverse(f: Sequence[int], n: int) -> List[int]:
    """g with f * g = 1 mod x^n, by Newton iteration g <- g * (2 - f * g)."""
    g = [pow(f[0], FIELD_PRIME - 2, FIELD_PRIME)]
    size = 1
    while size < n:
        size = min(2 * size, n)
        correction = [(-c) % FIELD_PRIME for c in _poly_mul(f[:size], g)[:size]]
        correction[0] = (correction[0] + 2) % FIELD_PRIME
        g = _poly_mul(g, correction)[:size]
    return g


def _poly_rem(a: Sequence[int], modulus: Sequence[int]) -> List[int]:
    """Remainder of ``a`` by a monic ``modulus``."""
    degree = len(modulus) - 1
    if len(a) <= degree:
        return list(a)
    if degree > KARATSUBA_CUTOFF:
        return _fast_rem(a, modulus)
    rem = list(a)
    for i in range(len(rem) - 1, degree - 1, -1):
        coef = rem[i] % FIELD_PRIME
        if coef:
            shift = i - degree
            for j in range(degree):
                rem[shift + j] = (rem[shift + j] - coef * modulus[j]) % FIELD_PRIME
        rem[i] = 0
    return rem[:degree]


def _fast_rem(a: Sequence[int], modulus: Sequence[int]) -> List[int]:
    """Division through the inverse of the reversed modulus as a power series."""
    degree = len(modulus) - 1
    quotient_len = len(a) - degree
    inverse = _series_inverse(modulus[::-1], quotient_len)
    reversed_quotient = _poly_mul(list(a[::-1][:quotient_len]), inverse)[:quotient_len]
    reversed_quotient += [0] * (quotient_len - len(reversed_quotient))
    product = _poly_mul(reversed_quotient[::-1], modulus)
    return [(a[i] - product[i]) % FIELD_PRIME for i in range(degree)]


def _subproduct_tree(xs: Sequence[int]) -> List[List[List[int]]]:
    """Levels of the subproduct tree, leaves (x - x_i) first, root last."""
    level = [[(-x) % FIELD_PRIME, 1] for x in xs]
    tree = [level]
    while len(level) > 1:
        paired = [_poly_mul(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
        tree.append(level)
    return tree


def multipoint_eval(h: HashFn, xs: Sequence[int]) -> List[int]:
    """
    Evaluate ``h`` on a batch of at most ``t`` points.

    Args:
        h: Hash function of independence t
        xs: Points in [0, p)

    Returns:
        ``[h(x) for x in xs]``

    Raises:
        ContractViolation: if the batch is larger than t or a point is outside the field
    """
    if len(xs) > h.independence:
        raise ContractViolation(
            f"batch of {len(xs)} points exceeds independence t={h.independence}"
        )
    for x in xs:
        if not FIELD.contains(x):
            raise ContractViolation(f"hash input {x} outside [0, p)")
    if len(xs) < MULTIPOINT_MIN_BATCH:
        return [h(x) for x in xs]

    tree = _subproduct_tree(xs)
    remainders = [_poly_rem(h.coefficients, tree[-1][0])]
    for level in reversed(tree[:-1]):
        remainders = [_poly_rem(remainders[i // 2], node) for i, node in enumerate(level)]
    return [(rem[0] if rem else 0) % h.range for rem in remainders]

