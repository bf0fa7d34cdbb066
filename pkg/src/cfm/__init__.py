"""Correction Function Method for the wave equation with interface jumps."""

from .errors import (
    AmbiguousClosestPoint,
    CFMError,
    CornerPoint,
    CoverageFailure,
    EmptyInterface,
    IllConditioned,
    InstabilityDetected,
    MissingCorrection,
    OutOfBox,
    UnsupportedOrder,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousClosestPoint",
    "CFMError",
    "CornerPoint",
    "CoverageFailure",
    "EmptyInterface",
    "IllConditioned",
    "InstabilityDetected",
    "MissingCorrection",
    "OutOfBox",
    "UnsupportedOrder",
]
