"""Exception hierarchy.

Validation errors (bad inputs, violated preconditions) are kept distinct
from solver-level failures so the CLI can exit with different status codes.
"""

from __future__ import annotations


class FracmixError(Exception):
    """Base class for all package errors."""


class ValidationError(FracmixError, ValueError):
    """Invalid parameters or violated preconditions."""


class EllipticityError(ValidationError):
    """Diffusivity sample fell below the declared ellipticity floor."""


class EvaluationError(FracmixError):
    """A special-function evaluation could not meet its error target.

    Carries the evaluation regime and the offending argument.
    """

    def __init__(self, regime: str, z: complex, message: str = ""):
        self.regime = regime
        self.z = z
        super().__init__(f"regime={regime} z={z!r}: {message}" if message
                         else f"regime={regime} z={z!r}")


class TruncationError(FracmixError):
    """Certified tail bound exceeded the quadrature budget.

    ``suggested_r_max`` is a truncation radius that would have sufficed.
    """

    def __init__(self, r_max: float, suggested_r_max: float):
        self.r_max = r_max
        self.suggested_r_max = suggested_r_max
        super().__init__(
            f"tail bound at r_max={r_max:g} exceeds budget; "
            f"increase r_max to at least {suggested_r_max:g}"
        )


class SingularSystemError(FracmixError):
    """A time-step linear system broke down (reaction exceeded the shift)."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(f"linear solve failed at step {step}" +
                         (f": {message}" if message else ""))
