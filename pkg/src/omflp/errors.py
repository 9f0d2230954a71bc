"""Exception types shared across the package."""

from __future__ import annotations


class OmflpError(Exception):
    """Base class for all package-specific errors."""


class FormatError(OmflpError):
    """An instance or solution document is malformed."""


class MissingCostError(OmflpError):
    """A table cost model has no entry for a queried (point, configuration)."""


class InfeasibleSolutionError(OmflpError):
    """A solution leaves some (request, commodity) uncovered."""

    def __init__(self, request_index: int, commodity: int):
        self.request_index = request_index
        self.commodity = commodity
        super().__init__(
            f"request {request_index} leaves commodity {commodity} uncovered"
        )


class OracleLimitError(OmflpError):
    """The exact solver refuses an instance outside its enumeration limits."""

    def __init__(self, reason: dict):
        self.reason = reason
        super().__init__(f"instance exceeds oracle limits: {reason}")


class GenerationError(OmflpError):
    """An instance generator could not satisfy its constraints."""


class InvariantViolation(OmflpError):
    """A runtime invariant check failed during an algorithm run."""
