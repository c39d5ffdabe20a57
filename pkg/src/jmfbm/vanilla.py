"""European call under the jump mixed-fBm model.

The price is the share-measure Poisson mixture of Black-Scholes-type terms,
each with the mixed-fBm window variance plus ``n`` jump variances and the
jump-adjusted rate ``r_n = r - lam*k + n ln(1+k)/dt`` in the strike discount.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy.special import ndtr

from .model import (
    ModelParams,
    SeriesControl,
    TimeWindow,
    conditional_moments,
    jump_discount,
    poisson_weights,
)

SERIES_CAP = "series_cap"


@dataclass(frozen=True)
class VanillaCallSpec:
    strike: float
    valuation_window: TimeWindow

    def __post_init__(self):
        if not self.strike > 0.0:
            raise ValueError(f"strike must be > 0, got {self.strike}")


@dataclass(frozen=True)
class PriceResult:
    """A price plus the diagnostics of the series that produced it.

    ``terms_used`` has one entry per Poisson dimension; ``details`` carries
    contract-specific extras such as solved critical prices.
    """

    value: float
    terms_used: Tuple[int, ...]
    tail_shortfall: float
    flags: frozenset = frozenset()
    details: dict = field(default_factory=dict, compare=False)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


def standardize(num, sd):
    """``num / sd`` with the zero-variance limit mapped to +/-inf."""
    num = np.asarray(num, float)
    sd = np.asarray(sd, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = num / sd
    z = np.where(sd > 0.0, z, np.where(num >= 0.0, np.inf, -np.inf))
    return float(z) if z.ndim == 0 else z


def _series_terms(params, s, strike, t_start, t_end, counts):
    """Per-count call values, broadcast as (len(s), len(counts))."""
    window = TimeWindow(t_start, t_end)
    mom = conditional_moments(params, window, counts)
    sd = np.sqrt(mom.variance)
    s = np.asarray(s, float)[..., None]
    log_m = np.log(s / strike)
    d2 = standardize(log_m + mom.mean, sd)
    d1 = standardize(log_m + mom.mean + mom.variance, sd)
    dt = window.length
    disc_k = strike * jump_discount(params, dt, counts)
    return s * math.exp(-params.q * dt) * ndtr(d1) - disc_k * ndtr(d2)


def call_value(params: ModelParams, s, strike: float, t_start: float, t_end: float,
               control: SeriesControl = SeriesControl()):
    """Vectorised call value in ``s`` (no diagnostics); see :func:`call_price`."""
    pw = poisson_weights(params.series_intensity * (t_end - t_start), control)
    terms = _series_terms(params, s, strike, t_start, t_end, pw.counts)
    out = terms @ pw.weights
    return float(out) if np.ndim(out) == 0 else out


def call_price(
    params: ModelParams,
    s0: float,
    spec: VanillaCallSpec,
    control: SeriesControl = SeriesControl(),
) -> PriceResult:
    """Price a European call on ``spec.valuation_window``."""
    if not s0 > 0.0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    w = spec.valuation_window
    pw = poisson_weights(params.series_intensity * w.length, control)
    terms = _series_terms(params, s0, spec.strike, w.t_start, w.t_end, pw.counts)
    value = float(np.dot(terms, pw.weights))
    flags = frozenset({SERIES_CAP}) if pw.capped else frozenset()
    return PriceResult(max(value, 0.0), (len(pw),), pw.shortfall, flags)


def call_price_in_spot(
    params: ModelParams,
    spec: VanillaCallSpec,
    control: SeriesControl = SeriesControl(),
) -> Callable[[float], float]:
    """The map ``s0 -> call value`` with the Poisson weights computed once."""
    w = spec.valuation_window
    pw = poisson_weights(params.series_intensity * w.length, control)

    def value(s0: float) -> float:
        terms = _series_terms(params, s0, spec.strike, w.t_start, w.t_end, pw.counts)
        return float(np.dot(terms, pw.weights))

    value.weights = pw
    return value
