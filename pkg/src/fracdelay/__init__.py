"""Numerical solver and stability certifier for multi-term fractional delay
differential equations written with a scale-function Caputo derivative."""

from .errors import AccuracyError, DomainError, NonConvergence

__version__ = "0.1.0"

__all__ = ["AccuracyError", "DomainError", "NonConvergence", "__version__"]
