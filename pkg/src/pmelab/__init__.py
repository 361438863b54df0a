"""Numerical laboratory for regularity of porous medium equation solutions."""

__version__ = "0.1.0"

from .fields import DomainError, Field, Grid, SpaceTimeField, read_pmef, write_pmef

__all__ = ["DomainError", "Field", "Grid", "SpaceTimeField", "read_pmef", "write_pmef", "__version__"]
