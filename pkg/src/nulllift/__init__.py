"""Null lifts of natural Hamiltonian systems and projective duality tools."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    EDFormError,
    ExpressionError,
    LiftError,
    MapError,
    NullliftError,
    ScenarioError,
    SingularMetricError,
)
from .fields import MatrixField, ScalarField, derivative, eval_field, parse_scalar_field

__all__ = [
    "DomainError",
    "EDFormError",
    "ExpressionError",
    "LiftError",
    "MapError",
    "MatrixField",
    "NullliftError",
    "ScalarField",
    "ScenarioError",
    "SingularMetricError",
    "derivative",
    "eval_field",
    "parse_scalar_field",
]
