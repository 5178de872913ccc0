"""Numerical laboratory for ``Δu = |x| χ{u>0}`` on the unit disk."""

from .catalog import CatalogSolution
from .grid import GridSpec, PolarTrace, ScalarField

__version__ = "0.1.0"

__all__ = ["CatalogSolution", "GridSpec", "PolarTrace", "ScalarField", "__version__"]
