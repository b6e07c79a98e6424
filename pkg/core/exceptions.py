"""
Exceptions - Error hierarchy for the flexible-consumer auction
Each error carries the exit code the CLI reports for it.
"""


class AuctionError(Exception):
    """Base class for every error raised by the mechanism code."""

    exit_code = 1


class InputValidationError(AuctionError, ValueError):
    """Malformed scenario, report or market data."""

    exit_code = 2


class DomainError(AuctionError, ValueError):
    """Valuation outside the support of its model."""

    exit_code = 2


class SingularDensityError(DomainError):
    """Density is zero where a virtual valuation was requested."""


class OracleSizeError(AuctionError, ValueError):
    """Instance too large for exhaustive enumeration."""

    exit_code = 2


class InternalConsistencyError(AuctionError, RuntimeError):
    """A mechanism invariant was broken (a bug, not a user error)."""


class InconsistentTraceError(InternalConsistencyError):
    """Served consumer whose virtual threshold is out of reach of its model."""


class MonotonicityViolationError(AuctionError, RuntimeError):
    """Allocation is not a monotone step function of the own valuation."""
