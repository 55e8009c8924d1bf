"""Cauchy-Fantappie-Leray formulas on complete intersections: numerics and checks."""
from .kernels import backend

__version__ = "0.1.0"

__all__ = ["backend", "__version__"]
