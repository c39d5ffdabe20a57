"""Closed-form and Monte Carlo pricing of vanilla, compound and extendible
calls when the underlying follows a mixed fractional Brownian motion with
compound Poisson jumps."""

from .compound import CompoundCallSpec, CriticalPrice, compound_call_price, critical_price
from .errors import (
    BracketError,
    DegenerateModelError,
    EvaluationError,
    NoExtensionRegionError,
    NotPositiveSemidefiniteError,
    PricingError,
    UnsupportedDimensionError,
)
from .extendible import (
    CriticalValues,
    ExtendibleCallSpec,
    ExtensionStage,
    NExtendibleSpec,
    critical_value_residuals,
    critical_values,
    extendible_call_price,
    mfbm_extendible_price,
    n_extendible_critical_values,
    n_extendible_price,
    richardson_extrapolate,
)
from .model import (
    ConditionalMoments,
    ModelParams,
    PoissonWeights,
    SeriesControl,
    TimeWindow,
    conditional_moments,
    jump_discount,
    log_return_correlation,
    poisson_weights,
)
from .montecarlo import (
    McConfig,
    McEstimate,
    mc_compound_price,
    mc_extendible_price,
    mc_n_extendible_price,
    mc_vanilla_price,
    mixed_covariance,
    simulate_terminal_values,
)
from .special import (
    Bracket,
    CorrelationMatrix,
    binorm_cdf,
    expand_bracket,
    find_root,
    multinorm_cdf,
    mvn_rectangle,
    norm_cdf,
)
from .vanilla import PriceResult, VanillaCallSpec, call_price, call_price_in_spot, call_value

__version__ = "0.1.0"

__all__ = [
    "Bracket",
    "BracketError",
    "CompoundCallSpec",
    "ConditionalMoments",
    "CorrelationMatrix",
    "CriticalPrice",
    "CriticalValues",
    "DegenerateModelError",
    "EvaluationError",
    "ExtendibleCallSpec",
    "ExtensionStage",
    "McConfig",
    "McEstimate",
    "ModelParams",
    "NExtendibleSpec",
    "NoExtensionRegionError",
    "NotPositiveSemidefiniteError",
    "PoissonWeights",
    "PriceResult",
    "PricingError",
    "SeriesControl",
    "TimeWindow",
    "UnsupportedDimensionError",
    "VanillaCallSpec",
    "binorm_cdf",
    "call_price",
    "call_price_in_spot",
    "call_value",
    "compound_call_price",
    "conditional_moments",
    "critical_price",
    "critical_value_residuals",
    "critical_values",
    "expand_bracket",
    "extendible_call_price",
    "find_root",
    "jump_discount",
    "log_return_correlation",
    "mc_compound_price",
    "mc_extendible_price",
    "mc_n_extendible_price",
    "mc_vanilla_price",
    "mfbm_extendible_price",
    "mixed_covariance",
    "multinorm_cdf",
    "mvn_rectangle",
    "n_extendible_critical_values",
    "n_extendible_price",
    "norm_cdf",
    "poisson_weights",
    "richardson_extrapolate",
    "simulate_terminal_values",
]
