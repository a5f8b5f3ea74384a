"""Exception and warning types shared across the package.

Each structured error carries a machine-readable ``code`` so the CLI can
emit uniform JSON error records.
"""


class PinwaveError(Exception):
    """Base class for structured solver errors."""

    code = "ERROR"


class DomainError(PinwaveError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    code = "DOMAIN_ERROR"


class ConvergenceError(PinwaveError):
    """A truncated series cannot meet the requested tolerance."""

    code = "CONVERGENCE_ERROR"


class WoodAnomalyError(PinwaveError):
    """A diffraction order is passing off: grating sums degenerate."""

    code = "WOOD_ANOMALY"

    def __init__(self, message, order=None, beta=None, kappa_p=None):
        super().__init__(message)
        self.order = order
        self.beta = beta
        self.kappa_p = kappa_p


class WindingError(PinwaveError):
    """log K does not close around a contour; factorization invalid."""

    code = "WINDING_ERROR"

    def __init__(self, message, winding=None):
        super().__init__(message)
        self.winding = winding


class ZeroOnContourError(PinwaveError):
    """|K| fell below the guard on a factorization circle."""

    code = "ZERO_ON_CONTOUR"


class NoPlateauError(PinwaveError):
    """Coefficient ratios oscillate without converging to a limit."""

    code = "NO_PLATEAU"

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = ratios


class IllConditionedWarning(UserWarning):
    """Linear system condition estimate exceeded the guard (1e12)."""

    code = "ILL_CONDITIONED"
