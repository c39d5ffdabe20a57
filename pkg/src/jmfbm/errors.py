"""Exception hierarchy shared by the pricing modules."""


class PricingError(Exception):
    """Base class for every error raised by :mod:`jmfbm`."""


class DegenerateModelError(PricingError):
    """A quantity needs positive variance but the model is deterministic."""


class BracketError(PricingError):
    """The root bracket does not straddle a sign change."""


class EvaluationError(PricingError):
    """A target function returned a non-finite value."""


class NotPositiveSemidefiniteError(PricingError):
    """A correlation matrix failed the factorization check."""


class UnsupportedDimensionError(PricingError):
    """Multivariate normal integration was requested above dimension 4."""


class NoExtensionRegionError(PricingError):
    """Extension is never optimal; the contract is a plain call on K1."""
