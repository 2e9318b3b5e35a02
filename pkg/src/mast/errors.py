"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MastError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(MastError):
    """Operand violates an operation's precondition (shape, range, finiteness)."""


class FormatError(MastError):
    """Malformed on-disk artifact (tensor file, PGM header, coefficient JSON)."""


class ConfigError(MastError):
    """Bad configuration value or unknown configuration key."""


class DegenerateInput(MastError):
    """Input is technically valid but the operation is undefined on it (e.g. zero norm)."""


class InfeasibleMasks(MastError):
    """Requested style allocation exceeds the total attention mass at some token."""

    def __init__(self, message: str, token_index: int | None = None,
                 allocation: float | None = None):
        super().__init__(message)
        self.token_index = token_index
        self.allocation = allocation


class DegenerateLogits(MastError):
    """Logits whose sharpness does not depend on temperature (all rows constant)."""


class SingularFit(MastError):
    """Rank-deficient design matrix in the polynomial fit."""


class EmptyBand(MastError):
    """No mask boundary found, so no boundary band can be formed."""


# Errors attributable to user-supplied inputs; the CLI maps these to exit code 2.
USER_INPUT_ERRORS = (InvalidInput, FormatError, ConfigError, DegenerateInput,
                     InfeasibleMasks, EmptyBand)
