"""Working-precision policy threaded through every numeric operation.

All arithmetic in this package goes through mpmath.  A PrecisionContext
pins the binary precision and the escalation policy used when a residual
certificate fails downstream.  Contexts are immutable; operations that
need more precision build a new context via ``escalated``.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp

from .errors import ValidationError

MIN_PRECISION_BITS = 64


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus retry policy.

    precision_bits: bits of mantissa for all arithmetic under this context.
    retry_factor: multiplier applied to precision_bits on escalation.
    max_retries: how many escalations a solver may attempt before giving up.
    """

    precision_bits: int = 256
    retry_factor: int = 2
    max_retries: int = 2

    def __post_init__(self):
        if self.precision_bits < MIN_PRECISION_BITS:
            raise ValidationError(
                f"precision_bits must be >= {MIN_PRECISION_BITS}, "
                f"got {self.precision_bits}")
        if self.retry_factor < 2:
            raise ValidationError("retry_factor must be an integer >= 2")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")

    def workprec(self, extra: int = 0):
        """mpmath precision guard: ``with ctx.workprec(): ...``."""
        return mp.workprec(self.precision_bits + extra)

    @property
    def eps(self):
        with mp.workprec(self.precision_bits):
            return mp.ldexp(1, 1 - self.precision_bits)

    def tolerance(self, divisor: int):
        """2^(-precision_bits/divisor), the package-wide tolerance shape."""
        with mp.workprec(64):
            return mp.ldexp(1, -(self.precision_bits // divisor))

    def escalated(self) -> "PrecisionContext":
        return PrecisionContext(self.precision_bits * self.retry_factor,
                                self.retry_factor, self.max_retries)


def context_for_index(n: int, retry_factor: int = 2,
                      max_retries: int = 2) -> PrecisionContext:
    """Default precision for a run at index n.

    Moment matrices grow exponentially ill-conditioned in n; 32 bits per
    index with a 256-bit floor keeps residuals certifiable at desk scale.
    """
    return PrecisionContext(max(256, 32 * n), retry_factor, max_retries)
