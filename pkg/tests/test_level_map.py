"""Tests for level routing and level selection."""

import math

import numpy as np
import pytest

from turnstilesampler.core.errors import ConfigurationError
from turnstilesampler.core.field_hash import HashFn, make_hash
from turnstilesampler.recovery.level_map import EMPTY_STREAM, LevelMap, level_count

pytestmark = pytest.mark.unit


def _identity_map(hash_range: int, decay: float = 0.5) -> LevelMap:
    # h(x) = x, so level_of(x) exposes the routing of raw hash values
    return LevelMap(HashFn(coefficients=(0, 1), range=hash_range), decay=decay)


class TestLevelCount:
    def test_power_of_two(self):
        assert level_count(0.5, 1 << 33) == 33
        assert level_count(0.25, 16) == 2

    def test_general_decay(self):
        assert level_count(0.3, 1000) == math.ceil(math.log(1000) / math.log(1 / 0.3))

    def test_at_least_one_level(self):
        assert level_count(0.5, 2) == 1


class TestLevelOf:
    def test_halving_ranges(self):
        levels = _identity_map(16)
        assert levels.levels == 4
        assert [levels.level_of_hash(h) for h in range(16)] == [3, 3, 2, 2, 1, 1, 1, 1] + [0] * 8

    def test_zero_hash_goes_to_deepest_level(self):
        levels = _identity_map(1 << 20)
        assert levels.level_of_hash(0) == levels.levels - 1

    @pytest.mark.parametrize("hash_range, decay", [(100, 0.5), (16, 0.25), (1 << 12, 0.125)])
    def test_fast_path_matches_threshold_walk(self, hash_range, decay):
        levels = _identity_map(hash_range, decay)
        for h in range(1, hash_range):
            assert levels.level_of_hash(h) == levels._level_general(h)

    def test_occupancy_is_geometric(self):
        levels = LevelMap(make_hash(5, 32, 1 << 21), decay=0.5)
        counts = np.bincount([levels.level_of(x) for x in range(1, 20_001)], minlength=levels.levels)
        assert counts[0] == pytest.approx(10_000, rel=0.05)
        assert counts[1] == pytest.approx(5_000, rel=0.08)
        assert counts[2] == pytest.approx(2_500, rel=0.12)

    def test_occupancy_within_tail_bound(self, tail_tolerance):
        t = 32
        levels = LevelMap(make_hash(9, t, 1 << 21), decay=0.5)
        distinct = 20_000
        counts = np.bincount([levels.level_of(x) for x in range(1, distinct + 1)], minlength=4)
        for level in range(4):
            expected = distinct * levels.level_fraction(level)
            deviation = tail_tolerance(expected, t)
            assert deviation < 1.0
            assert abs(counts[level] - expected) <= deviation * expected

    def test_rejects_bad_parameters(self):
        h = make_hash(1, 2, 64)
        with pytest.raises(ConfigurationError):
            LevelMap(h, decay=1.0)
        with pytest.raises(ConfigurationError):
            LevelMap(h, alpha=1.0)


class TestSelectLevel:
    def setup_method(self):
        self.levels = LevelMap(make_hash(9, 32, 1 << 33), decay=0.5, alpha=1.5)

    def test_empty_stream(self):
        assert self.levels.select_level(0.0, 100) == EMPTY_STREAM
        assert EMPTY_STREAM.is_empty

    def test_small_estimate_selects_whole_stream(self):
        selection = self.levels.select_level(50.0, 100)
        assert selection.whole_stream
        assert selection.level == 0

    def test_worked_example(self):
        # L0 = 12K / (1 - lambda): level 2 is the deepest with 2K expected values
        assert self.levels.select_level(2400.0, 100).level == 2

    @pytest.mark.parametrize("estimate", [1_000.0, 4_321.5, 10_000.0, 123_456.0, 9.9e6])
    def test_selection_inequality(self, estimate):
        k = 50
        selection = self.levels.select_level(estimate, k)
        level = selection.level
        scale = estimate * 0.5 / 1.5
        assert not selection.whole_stream
        assert scale * 0.5 ** (level + 1) < 2 * k <= scale * 0.5 ** level

    def test_clamps_to_last_level(self):
        levels = LevelMap(make_hash(9, 32, 64), decay=0.5)
        selection = levels.select_level(1e12, 1)
        assert selection.level == levels.levels - 1
        assert selection.clamped

    def test_deeper(self):
        selection = self.levels.select_level(10_000.0, 50)
        assert selection.deeper(2).level == selection.level + 2
