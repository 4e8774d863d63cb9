"""
Exception hierarchy for tbs-noma.

Every error raised on purpose by the package derives from TbsNomaError so
callers (the CLI in particular) can map them onto exit codes.
"""

from typing import Optional


class TbsNomaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TbsNomaError, ValueError):
    """Invalid power allocation, gains, SNR, policy or config file."""


class InvalidPowerAllocationError(ConfigurationError):
    """A mode beta term is not positive for the requested power split."""

    def __init__(self, mode_id: int, term: int, value: float,
                 detail: Optional[str] = None):
        self.mode_id = mode_id
        self.term = term
        self.value = value
        message = (
            f"mode {mode_id}: beta_{term} = {value:.6g} <= 0, "
            f"power allocation too aggressive for this mode"
        )
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class InputShapeError(TbsNomaError, ValueError):
    """Bit vector of the wrong length for the constellation."""


class DomainError(TbsNomaError, ValueError):
    """Argument outside the domain of a special function."""


class UndefinedConditionalError(TbsNomaError):
    """Conditional SIC error probability requested for an infeasible threshold."""


class ValidationFailure(TbsNomaError):
    """One or more acceptance checks failed."""

    def __init__(self, failed: int, total: int):
        self.failed = failed
        self.total = total
        super().__init__(f"{failed} of {total} validation checks failed")
