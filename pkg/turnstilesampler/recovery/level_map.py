"""
Geometric level routing.

Every value x is mapped to exactly one level l in [0, L): the level whose
scaled hash h_l(x) = floor(h(x) / (lambda^l * M)) is zero while h_{l+1}(x)
is not. Level l therefore receives a lambda^l * (1 - lambda) fraction of
the distinct values. At extraction time a level is chosen from an L0
estimate alone, so the choice never depends on which values landed where.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..core.errors import ConfigurationError
from ..core.field_hash import HashFn


@dataclass(frozen=True)
class LevelSelection:
    """
    Outcome of level selection.

    ``level`` is None for an empty stream. ``whole_stream`` marks the case
    where even level 0 would expect fewer than 2K values, so every level is
    recovered and the union returned. ``clamped`` marks a result forced
    into [0, L-1].
    """

    level: Optional[int]
    whole_stream: bool = False
    clamped: bool = False

    @property
    def is_empty(self) -> bool:
        return self.level is None

    def deeper(self, steps: int = 1) -> "LevelSelection":
        """The single level ``steps`` below this selection."""
        base = 0 if self.level is None else self.level
        return LevelSelection(level=base + steps)


EMPTY_STREAM = LevelSelection(level=None)


def level_count(decay: float, hash_range: int) -> int:
    """L = ceil(log_{1/lambda} M), at least 1."""
    shift = _power_of_two_shift(decay)
    if shift is not None:
        return max(1, -(-(hash_range - 1).bit_length() // shift))
    return max(1, math.ceil(math.log(hash_range) / math.log(1.0 / decay) - 1e-12))


def _power_of_two_shift(decay: float) -> Optional[int]:
    mantissa, exponent = math.frexp(decay)
    if mantissa == 0.5 and exponent <= 0:
        return 1 - exponent
    return None


class LevelMap:
    """
    Level routing for one sketch.

    Args:
        hash_fn: h: [m] -> [M], range M
        decay: lambda in (0, 1)
        alpha: L0 approximation factor (> 1) assumed by level selection
    """

    def __init__(self, hash_fn: HashFn, decay: float = 0.5, alpha: float = 1.5):
        if not 0.0 < decay < 1.0:
            raise ConfigurationError(f"decay must lie in (0, 1), got {decay}")
        if alpha <= 1.0:
            raise ConfigurationError(f"alpha must exceed 1, got {alpha}")
        self.hash_fn = hash_fn
        self.decay = decay
        self.alpha = alpha
        self.hash_range = hash_fn.range
        self.levels = level_count(decay, self.hash_range)
        self._shift = _power_of_two_shift(decay)
        self._decay_exact = Fraction(decay)

    def level_of(self, x: int) -> int:
        """Level of value ``x``."""
        return self.level_of_hash(self.hash_fn(x))

    def level_of_hash(self, hashed: int) -> int:
        """Level of a value whose level hash is ``hashed``."""
        if hashed <= 0:
            return self.levels - 1
        if self._shift is not None:
            # smallest e with hashed * 2^e >= M; level l holds jl < e <= j(l+1)
            e = self.hash_range.bit_length() - hashed.bit_length()
            if (hashed << e) < self.hash_range:
                e += 1
            level = -(-e // self._shift) - 1
        else:
            level = self._level_general(hashed)
        return min(max(level, 0), self.levels - 1)

    def _level_general(self, hashed: int) -> int:
        level = 0
        threshold = Fraction(self.hash_range)
        while level < self.levels - 1:
            threshold *= self._decay_exact
            if hashed >= threshold:
                return level
            level += 1
        return level

    def level_fraction(self, level: int) -> float:
        """Expected fraction of distinct values routed to ``level``."""
        return self.decay ** level * (1.0 - self.decay)

    def select_level(self, l0_estimate: float, target: int) -> LevelSelection:
        """
        Choose the extraction level from an L0 estimate.

        Picks l* with (1/a) L0 d^(l*+1) (1-d) < 2K <= (1/a) L0 d^l* (1-d),
        where a is alpha and d the decay. Estimates too small for level 0
        select the whole stream; too large ones clamp to L-1.
        """
        if l0_estimate <= 0:
            return EMPTY_STREAM
        scale = l0_estimate * (1.0 - self.decay) / self.alpha
        need = 2.0 * target

        if scale < need:
            return LevelSelection(level=0, whole_stream=True, clamped=True)

        level = int(math.floor(math.log(scale / need) / math.log(1.0 / self.decay)))
        level = max(level, 0)
        # float log may be off by one at the boundaries
        while level > 0 and scale * self.decay ** level < need:
            level -= 1
        while scale * self.decay ** (level + 1) >= need:
            level += 1

        if level > self.levels - 1:
            return LevelSelection(level=self.levels - 1, clamped=True)
        return LevelSelection(level=level)
