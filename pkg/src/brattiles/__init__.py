"""Bratteli multi-diagrams, borders and border equivalence for
integer-inflation substitution tilings on the lattice."""

from .geometry import Cell, Coordinate, GeometryError, Patch, Prototile, Tile
from .rules import BUILTIN_RULES, RuleError, SubstitutionRule, chair, load_rule, period_doubling

__all__ = [
    "Cell",
    "Coordinate",
    "GeometryError",
    "Patch",
    "Prototile",
    "Tile",
    "BUILTIN_RULES",
    "RuleError",
    "SubstitutionRule",
    "chair",
    "load_rule",
    "period_doubling",
]
