"""Call-on-call pricing.

The compound call is exercised at ``T1`` when the underlying call is worth
more than ``K1``, i.e. when the spot exceeds the critical price ``S1*``.  Given
the jump counts on ``[T0, T1)`` and ``[T1, T2]`` the log-returns to ``T1`` and
``T2`` are jointly Gaussian, so the price is a double Poisson series of
bivariate normal terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import PricingError
from .model import (
    ModelParams,
    SeriesControl,
    TimeWindow,
    conditional_moments,
    jump_discount,
    poisson_weights,
)
from .special import binorm_cdf, expand_bracket, find_root
from .vanilla import SERIES_CAP, PriceResult, VanillaCallSpec, call_price_in_spot, standardize

# bracket expansion gives up beyond this multiple of the inner strike
_MAX_EXPANSION = 2.0**60


@dataclass(frozen=True)
class CompoundCallSpec:
    """Call with strike ``outer_strike`` at ``outer_expiry`` on a call (``inner_strike``, ``inner_expiry``)."""

    outer_strike: float
    outer_expiry: float
    inner_strike: float
    inner_expiry: float
    valuation_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.valuation_time < self.outer_expiry < self.inner_expiry:
            raise ValueError("need 0 <= T0 < T1 < T2")
        if not self.inner_strike > 0.0:
            raise ValueError("inner strike must be > 0")
        if not self.outer_strike >= 0.0:
            raise ValueError("outer strike must be >= 0")


@dataclass(frozen=True)
class CriticalPrice:
    value: float
    residual: float


def critical_price(
    params: ModelParams,
    spec: CompoundCallSpec,
    control: SeriesControl = SeriesControl(),
    tol: float = 1e-12,
) -> CriticalPrice:
    """Spot at ``T1`` where the inner call is worth exactly ``K1``.

    ``K1 = 0`` returns the sentinel ``S1* = 0`` (every state exercises).
    """
    k1, k = spec.outer_strike, spec.inner_strike
    if k1 == 0.0:
        return CriticalPrice(0.0, 0.0)
    inner = call_price_in_spot(
        params, VanillaCallSpec(k, TimeWindow(spec.outer_expiry, spec.inner_expiry)), control
    )

    def excess(s):
        return inner(s) - k1

    start = k1 + k * math.exp(-params.r * (spec.inner_expiry - spec.outer_expiry))
    bracket = expand_bracket(excess, start, increasing=True,
                             lower_limit=1e-300, upper_limit=_MAX_EXPANSION * k)
    root = find_root(excess, bracket, x_tol=4e-16 * start, f_tol=tol)
    h = 1e-6 * root
    if not inner(root + h) - inner(root - h) > 0.0:
        raise PricingError(f"inner call is flat at the critical price {root}; root not unique")
    return CriticalPrice(root, abs(excess(root)))


def compound_call_price(
    params: ModelParams,
    s0: float,
    spec: CompoundCallSpec,
    control: SeriesControl = SeriesControl(),
    critical: CriticalPrice | None = None,
) -> PriceResult:
    """Price of the compound call at ``spec.valuation_time``."""
    if not s0 > 0.0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    t0, t1, t2 = spec.valuation_time, spec.outer_expiry, spec.inner_expiry
    k1, k = spec.outer_strike, spec.inner_strike
    if critical is None:
        critical = critical_price(params, spec, control)
    s_star = critical.value

    half = control.split(2)
    w1 = poisson_weights(params.series_intensity * (t1 - t0), half)
    w2 = poisson_weights(params.series_intensity * (t2 - t1), half)
    n1 = w1.counts[:, None]
    m = n1 + w2.counts[None, :]

    mom1 = conditional_moments(params, TimeWindow(t0, t1), n1)
    mom2 = conditional_moments(params, TimeWindow(t0, t2), m)
    sd1, sd2 = np.sqrt(mom1.variance), np.sqrt(mom2.variance)

    with np.errstate(divide="ignore"):
        log_a = math.log(s0 / s_star) if s_star > 0.0 else math.inf
    a2 = standardize(log_a + mom1.mean, sd1)
    a1 = standardize(log_a + mom1.mean + mom1.variance, sd1)
    log_b = math.log(s0 / k)
    b2 = standardize(log_b + mom2.mean, sd2)
    b1 = standardize(log_b + mom2.mean + mom2.variance, sd2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(sd2 > 0.0, np.sqrt(mom1.variance / mom2.variance), 0.0)
    rho = np.broadcast_to(rho, m.shape)

    disc2 = k * jump_discount(params, t2 - t0, m)
    grid = (s0 * math.exp(-params.q * (t2 - t0)) * binorm_cdf(a1 + 0 * m, b1, rho)
            - disc2 * binorm_cdf(a2 + 0 * m, b2, rho))
    long_leg = w1.weights @ grid @ w2.weights

    disc1 = k1 * jump_discount(params, t1 - t0, w1.counts)
    strike_leg = float(np.dot(w1.weights, disc1 * ndtr(np.ravel(a2))))

    value = max(float(long_leg - strike_leg), 0.0)
    flags = frozenset({SERIES_CAP}) if (w1.capped or w2.capped) else frozenset()
    return PriceResult(
        value,
        (len(w1), len(w2)),
        w1.shortfall + w2.shortfall,
        flags,
        {"critical_price": s_star, "critical_residual": critical.residual},
    )
