"""Exception hierarchy shared by all modules.

Two failure families matter to callers: input/validation problems
(rejected before any numerics run) and numeric failures (an algorithm
ran and could not certify its result).  The CLI maps the first family
to exit code 1 and the second to exit code 2.
"""


class HplabError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HplabError):
    """Input rejected: bad parameters, bad config, out-of-domain request."""


class OnCutError(ValidationError):
    """Evaluation point lies on a cut (E, F, or a measure's support)."""


class ExpressionSyntaxError(ValidationError):
    """Expression text failed to parse; carries the offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class TruncationError(ValidationError):
    """Series truncation too short for the requested operation."""


class NumericError(HplabError):
    """Computation ran but could not produce a certified result."""


class ZeroSeriesError(NumericError):
    """Division by (or square root of) a series that is zero to truncation."""


class ContinuationError(NumericError):
    """Branch continuation failed: clearance violation or refinement budget."""


class ResidualCertificateError(NumericError):
    """Residual check failed after all precision escalations."""
