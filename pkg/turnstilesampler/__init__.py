"""
turnstilesampler - Mergeable exact sampling over turnstile streams

Sketches a stream of (value, count) updates, deletions included, and
extracts a sample of distinct surviving values together with their exact
total counts. Sketches with the same configuration and seed add and
subtract cellwise, so streams can be sketched in parallel and combined.

Key Features:
- Full recovery (FRS) and epsilon-full recovery (eFRS) per level
- Strict and non-strict turnstile models
- History-independent, bit-exact sketch containers
- Inverse distribution and Jaccard estimates from exact samples
"""

__version__ = "1.0.0"

from .core.config import SamplerConfig, SamplerSettings, build_config
from .core.sampler import Sample, SamplerSketch
from .core import container
from .stats import jaccard

__all__ = [
    "Sample",
    "SamplerConfig",
    "SamplerSettings",
    "SamplerSketch",
    "build_config",
    "container",
    "jaccard",
]
