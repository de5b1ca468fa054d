"""Counting functions of a constrained gamma process, their sieve oracles, and
one-dimensional path-decomposition propagators."""

from .errors import (
    CacheCorruption,
    CongammaError,
    ConvergenceError,
    DomainError,
    PrecisionExhausted,
    RangeError,
    ResourceError,
)
from .specfun import DEFAULT_POLICY, BigReal, PrecisionPolicy, SeriesResult

__version__ = "0.1.0"

__all__ = [
    "BigReal", "PrecisionPolicy", "SeriesResult", "DEFAULT_POLICY",
    "CongammaError", "DomainError", "RangeError", "ResourceError",
    "PrecisionExhausted", "ConvergenceError", "CacheCorruption",
]
