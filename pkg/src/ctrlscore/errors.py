"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: parse/IO errors -> 1, non-convergence
-> 2, infeasibility -> 3, schema/alignment errors -> 4.
"""

from __future__ import annotations


class CtrlScoreError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CtrlScoreError):
    """Malformed input file (ragged rows, non-numeric cells, bad values)."""


class SchemaError(CtrlScoreError):
    """Structured document violates the expected schema or alignment."""


class InvalidHorizonError(CtrlScoreError):
    """Horizon T is non-positive or otherwise unusable."""


class HorizonOverflowError(CtrlScoreError):
    """exp(A*t) left the representable range; the horizon is divergent."""


class InfeasibleAllocationError(CtrlScoreError):
    """Aggregate Gramian at the given allocation is singular or indefinite."""

    def __init__(self, message: str, lambda_min: float = float("nan")):
        super().__init__(message)
        self.lambda_min = lambda_min


class StagnationError(CtrlScoreError):
    """Armijo backtracking could not find any admissible step."""
