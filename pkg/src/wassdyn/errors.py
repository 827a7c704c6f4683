"""Exception hierarchy for wassdyn.

Library code raises these; the command layer turns them into ``CommandResult`` objects.
"""

from __future__ import annotations


class WassdynError(Exception):
    """Base class for every error raised by wassdyn."""


class MeasureValidationError(WassdynError, ValueError):
    """Non-finite coordinates or weights, negative weights, inconsistent dimensions."""


class MeasureConstructionError(WassdynError, ValueError):
    """No atom with positive weight survived filtering."""


class DimensionMismatchError(WassdynError, ValueError):
    """Two objects living in different ambient dimensions were combined."""

    def __init__(self, expected: int, got: int, what: str = "point") -> None:
        super().__init__(f"dimension mismatch: expected {what} of dim {expected}, got dim {got}")
        self.expected = expected
        self.got = got


class SolverError(WassdynError, RuntimeError):
    """The transport solver failed on a feasible instance (internal error)."""


class SupportTooLargeError(WassdynError, ValueError):
    """The exact solver was asked for an instance above its size limit."""

    def __init__(self, atoms: int, limit: int) -> None:
        super().__init__(
            f"support product {atoms} exceeds the exact-solver limit {limit}; subsample the measure first"
        )
        self.atoms = atoms
        self.limit = limit


class ExpressionError(WassdynError, ValueError):
    """Base for expression parse/evaluation failures; carries a byte offset."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at offset {offset})")
        self.reason = message
        self.offset = offset


class ParseError(ExpressionError):
    """Unknown identifier, arity mismatch, unbalanced parentheses, trailing tokens, bad literal."""


class EvaluationError(ExpressionError):
    """Domain error while evaluating an expression (sqrt of negative, division by zero, overflow)."""


class SpecError(WassdynError, ValueError):
    """Malformed map or kernel specification string."""


class ExperimentConfigError(WassdynError, ValueError):
    """Experiment configuration failed validation."""
