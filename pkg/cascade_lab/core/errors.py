class CascadeLabError(Exception):
    """Base class for all errors raised by cascade_lab."""


class DomainError(CascadeLabError, ValueError):
    """Argument outside the domain where a formula is valid."""


class AdmissibilityError(DomainError):
    """Manifold state with x >= xc (or E >= E_c for the Y family)."""


class ResonanceError(CascadeLabError, ValueError):
    """Coupling requested for indices with n + m != k + j."""


class BranchMismatchError(CascadeLabError):
    """Closed-form phase branch does not match the solution parameters."""


class FitError(CascadeLabError):
    """Not enough usable data for a least-squares fit."""


class AliasingError(CascadeLabError):
    """Position-space grid too coarse for the mode truncation."""


class ConfigValidationError(CascadeLabError):
    """Invalid scenario or integrator configuration.

    :param field: dotted path of the offending field.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class StepUnderflow(CascadeLabError):
    """Adaptive step fell below the configured minimum."""

    def __init__(self, t: float, h: float):
        self.t = t
        self.h = h
        super().__init__(f"step underflow at t={t:.17g} (h={h:.3e})")
