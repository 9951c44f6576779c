"""
Configuration management for turnstilesampler.

``SamplerConfig`` fixes everything a sketch's state depends on: stream
model, recovery structure, target sample size, failure probability,
admission bounds and the master seed. Two sketches can be merged only
when their configs are equal. ``SamplerSettings`` supplies command-line
defaults from the environment, a ``.env`` file or a YAML file.
"""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..recovery.bin_sketch import admit_capacity
from ..recovery.l0_estimate import GUARD_RANGE
from .errors import ConfigurationError
from .field_hash import FIELD_PRIME

DEFAULT_UNIVERSE = 1 << 32
DEFAULT_MAX_COUNT = 1 << 31
DEFAULT_MAX_LENGTH = 1 << 30
DEFAULT_SEED = 0x5EED


class StreamModel(str, Enum):
    """Turnstile stream models."""
    STRICT = "strict"
    NONSTRICT = "nonstrict"


class RecoveryKind(str, Enum):
    """Per-level recovery structures."""
    FRS = "frs"
    EFRS = "efrs"


class L0Kind(str, Enum):
    """L0 estimator implementations."""
    AMPLIFIED = "amplified"
    EXACT = "exact"


class SamplerConfig(BaseModel):
    """Complete, immutable configuration of one sampler sketch."""

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    model: StreamModel = StreamModel.STRICT
    recovery: RecoveryKind = RecoveryKind.FRS
    k: int = Field(default=64, ge=1, description="Requested sample size K")
    delta: float = Field(default=0.1, gt=0.0, lt=1.0, description="Failure probability")
    eps: Optional[float] = Field(default=None, gt=0.0, lt=1.0, description="Partial-sample loss")

    universe: int = Field(default=DEFAULT_UNIVERSE, ge=2, description="Values lie in [1, m)")
    max_count: int = Field(default=DEFAULT_MAX_COUNT, ge=1, description="|c| <= r per update")
    max_length: int = Field(default=DEFAULT_MAX_LENGTH, ge=1, description="Stream length bound")

    decay: float = Field(default=0.5, gt=0.0, lt=1.0, description="Level decay lambda")
    alpha: float = Field(default=1.5, gt=1.0, description="L0 approximation factor")
    hash_range: Optional[int] = Field(default=None, description="Level hash range M (2m)")
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=1 << 64)

    l0_kind: L0Kind = L0Kind.AMPLIFIED
    l0_amplification: int = Field(default=4, ge=1)
    l0_cells: int = Field(default=64, ge=2)
    sample_floor: float = Field(default=1.0, ge=0.0, description="c_K in the K floors")
    level_independence: float = Field(default=2.0, gt=0.0)
    max_fallbacks: int = Field(default=2, ge=0)

    @field_validator("hash_range")
    @classmethod
    def validate_hash_range(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and not 2 <= v < FIELD_PRIME:
            raise ValueError("hash_range must lie in [2, p)")
        return v

    @model_validator(mode="after")
    def validate_contract(self) -> "SamplerConfig":
        if self.universe >= FIELD_PRIME:
            raise ValueError("universe must be smaller than the field prime")
        if self.level_hash_range < 2 * self.universe:
            raise ValueError("hash_range must be at least 2m")
        floor = self.sample_floor * math.log2(1.0 / self.delta)
        if self.recovery is RecoveryKind.EFRS:
            if self.eps is None:
                raise ValueError("eps is required with efrs recovery")
            floor /= self.eps
            if self.k < floor:
                raise ValueError(
                    f"k={self.k} is below the efrs floor (1/eps)*log2(1/delta) = {floor:.1f}"
                )
        elif self.eps is not None:
            raise ValueError("eps only applies to efrs recovery")
        elif self.k < floor:
            raise ValueError(f"k={self.k} is below the frs floor log2(1/delta) = {floor:.1f}")
        # CapacityError passes through pydantic unwrapped
        admit_capacity(self.universe, self.max_count, self.max_length, *self.counter_ranges)
        return self

    @property
    def strict(self) -> bool:
        return self.model is StreamModel.STRICT

    @property
    def level_hash_range(self) -> int:
        return self.hash_range if self.hash_range is not None else 2 * self.universe

    @property
    def capacity(self) -> int:
        """K~ = ceil((2 alpha / lambda + 1) K), the most values the chosen level should hold."""
        return math.ceil((2.0 * self.alpha / self.decay + 1.0) * self.k)

    @property
    def level_hash_independence(self) -> int:
        """t_lvl = max(32, ceil(c * log2(1/delta)))."""
        return max(32, math.ceil(self.level_independence * math.log2(1.0 / self.delta)))

    @property
    def efrs_width(self) -> int:
        return 4 * self.capacity

    @property
    def guard_range(self) -> int:
        """q = ceil(4 K~ / delta) for the non-strict eFRS guard hash."""
        return max(2, math.ceil(4 * self.capacity / self.delta))

    @property
    def counter_ranges(self) -> Tuple[int, ...]:
        """Ranges of the hashes that enter cell counters (W and T)."""
        ranges: List[int] = []
        if self.recovery is RecoveryKind.EFRS:
            ranges.append(self.efrs_width)
            if not self.strict:
                ranges.append(self.guard_range)
        if self.l0_kind is L0Kind.AMPLIFIED:
            ranges.append(GUARD_RANGE)
        return tuple(ranges)

    def describe(self) -> Dict[str, Any]:
        """Plain dictionary of fields plus the derived sizes."""
        data = self.model_dump(mode="json")
        data["capacity"] = self.capacity
        data["level_hash_independence"] = self.level_hash_independence
        data["level_hash_range"] = self.level_hash_range
        return data


def build_config(**values: Any) -> SamplerConfig:
    """
    Validate ``values`` into a ``SamplerConfig``.

    Raises:
        ConfigurationError: with pydantic's messages joined on one line
    """
    try:
        return SamplerConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigurationError(problems) from e


class SamplerSettings(BaseSettings):
    """Command-line defaults, overridable by environment and YAML."""

    model_config = SettingsConfigDict(
        env_prefix="TURNSTILESAMPLER_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    seed: int = DEFAULT_SEED
    universe: int = DEFAULT_UNIVERSE
    max_count: int = DEFAULT_MAX_COUNT
    max_length: int = DEFAULT_MAX_LENGTH
    decay: float = 0.5
    alpha: float = 1.5
    l0_kind: L0Kind = L0Kind.AMPLIFIED
    log_level: str = "WARNING"
    log_format: str = "console"

    @classmethod
    def load_from_yaml(cls, path: Path) -> "SamplerSettings":
        """Settings from a YAML mapping; environment fills whatever it omits."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{path}: invalid YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a mapping of settings")
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigurationError(f"{path}: {e.errors()[0]['msg']}") from e


def load_settings(config_path: Optional[Path] = None) -> SamplerSettings:
    """
    Load settings from a YAML file or from the environment.

    Args:
        config_path: Optional path to a YAML settings file

    Returns:
        Loaded settings
    """
    if config_path is not None:
        return SamplerSettings.load_from_yaml(config_path)
    return SamplerSettings()
