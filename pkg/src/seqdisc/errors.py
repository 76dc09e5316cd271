"""
Exception hierarchy shared by every seqdisc module.

Each exception carries the process exit code the command line reports for it.
Verification failures are not exceptions; they are recorded in reports.
"""

from typing import Any, List, Optional


class SeqdiscError(Exception):
    """Base class for all seqdisc errors."""

    exit_code = 3


class InvalidInputError(SeqdiscError, ValueError):
    """Input data violates a documented invariant."""

    exit_code = 2

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations) if violations else [message]
        super().__init__(message)


class CapacityError(SeqdiscError):
    """A Kronecker product or materialized ensemble exceeds the dimension cap."""

    exit_code = 2

    def __init__(self, dim: int, cap: int, what: str = "dimension"):
        self.dim = dim
        self.cap = cap
        super().__init__(f"{what} {dim} exceeds cap {cap}")


class NumericError(SeqdiscError, ArithmeticError):
    """A numerical routine failed to converge."""

    exit_code = 3

    def __init__(self, message: str, iterations: Optional[int] = None,
                 diagnostics: Optional[dict] = None):
        self.iterations = iterations
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SolverFailure(NumericError):
    """An SDP solve ended with a status other than optimal."""

    def __init__(self, message: str, solution: Any = None):
        self.solution = solution
        iterations = getattr(solution, "iterations", None)
        super().__init__(message, iterations=iterations)
