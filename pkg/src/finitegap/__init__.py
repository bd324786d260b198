"""Finite-gap spectral toolkit: comb maps, reflectionless Weyl pairs, Jacobi
models, translation flow and brute-force oracles."""

from .domain import (ChangeOfVariables, CombData, Divisor, FiniteGapSet, Scene, ZDivisor,
                     ZSet, map_set, parse_scene, validate_divisor, validate_set)
from .errors import FiniteGapError, NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "ChangeOfVariables", "CombData", "Divisor", "FiniteGapSet", "Scene", "ZDivisor", "ZSet",
    "map_set", "parse_scene", "validate_divisor", "validate_set",
    "FiniteGapError", "NumericalError", "ValidationError",
]
