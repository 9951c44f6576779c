"""
Utility modules for turnstilesampler.

Structured logging and Prometheus metrics shared by the library and the
command line.
"""

from .logging import get_logger, setup_logging
from .metrics import MetricsCollector

__all__ = [
    "get_logger",
    "setup_logging",
    "MetricsCollector",
]
