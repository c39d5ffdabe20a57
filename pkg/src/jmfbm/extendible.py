"""Holder-extendible calls.

At ``T1`` the holder of an extendible call abandons it below the critical
value ``L``, exercises above ``M``, and in between pays a premium ``A`` to
roll into a call with strike ``K2`` expiring at ``T2``.  The one-extension
price is a double Poisson series of univariate and bivariate normal terms.
The N-extension version generalises this to multivariate normal terms over
the stage log-returns, with critical values found by backward induction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .errors import (
    BracketError,
    DegenerateModelError,
    NoExtensionRegionError,
    UnsupportedDimensionError,
)
from .model import (
    ModelParams,
    SeriesControl,
    TimeWindow,
    conditional_moments,
    jump_discount,
    log_return_correlation,
    poisson_weights,
)
from .special import MAX_DIMENSION, binorm_cdf, expand_bracket, find_root, mvn_rectangle
from .vanilla import SERIES_CAP, PriceResult, call_value, standardize

_MAX_EXPANSION = 2.0**60


class CriticalValues(NamedTuple):
    lower: float  # L: abandon below, extend above
    upper: float  # M: extend below, exercise above


@dataclass(frozen=True)
class ExtendibleCallSpec:
    strike1: float
    expiry1: float
    strike2: float
    expiry2: float
    premium: float
    valuation_time: float = 0.0
    critical_values: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not 0.0 <= self.valuation_time < self.expiry1 < self.expiry2:
            raise ValueError("need 0 <= T0 < T1 < T2")
        if not (self.strike1 > 0.0 and self.strike2 > 0.0):
            raise ValueError("strikes must be > 0")
        if not self.premium >= 0.0:
            raise ValueError("premium must be >= 0")
        if self.critical_values is not None:
            lo, hi = self.critical_values
            if not 0.0 <= lo <= hi:
                raise ValueError(f"need 0 <= L <= M, got L={lo}, M={hi}")
            object.__setattr__(self, "critical_values", CriticalValues(float(lo), float(hi)))


def _log_ratio(s0: float, level: float) -> float:
    if level == 0.0:
        return math.inf
    if level == math.inf:
        return -math.inf
    return math.log(s0 / level)


def _solve_stage(
    continuation: Callable[[float], float],
    strike: float,
    premium: float,
    start: float,
    tol: float,
    far_gap: Optional[float] = None,
) -> CriticalValues:
    """Indifference levels for one decision date.

    ``continuation(s)`` is the value of what extension delivers (before the
    premium).  L solves ``continuation = premium``; M solves
    ``s - strike = continuation - premium`` above L.  ``far_gap`` is the limit
    of that difference as ``s -> inf`` when it is finite (no dividends); a
    non-negative limit means extending beats exercising at every large spot.
    """
    if premium == 0.0:
        lower = 0.0
    else:
        def keep(s):
            return continuation(s) - premium
        try:
            br = expand_bracket(keep, start, increasing=True, lower_limit=1e-300,
                                upper_limit=_MAX_EXPANSION * max(strike, start))
        except BracketError:
            raise NoExtensionRegionError(
                "premium exceeds the extended call's value at every spot; "
                "the contract is a plain call on the first strike"
            ) from None
        lower = find_root(keep, br, x_tol=4e-16 * start, f_tol=tol)
    if lower >= strike:
        raise NoExtensionRegionError(
            f"L = {lower:.6g} >= K1 = {strike:.6g}: exercising always beats extending; "
            "the contract is a plain call on the first strike"
        )

    def switch(s):
        return continuation(s) - premium - (s - strike)

    if far_gap is not None and far_gap >= 0.0:
        # any sign change found far out would be cancellation noise in C(s) - s
        raise NoExtensionRegionError(
            "extending beats exercising at every spot above L (M is infinite); "
            "pass critical_values=(L, inf) to price with no exercise region"
        )
    try:
        br = expand_bracket(switch, strike, increasing=False,
                            upper_limit=_MAX_EXPANSION * strike)
    except BracketError:
        raise NoExtensionRegionError(
            "extending beats exercising at every spot above L (M is infinite); "
            "pass critical_values=(L, inf) to price with no exercise region"
        ) from None
    upper = find_root(switch, br, x_tol=4e-16 * strike, f_tol=tol)
    return CriticalValues(lower, max(upper, lower))


def critical_values(
    params: ModelParams,
    spec: ExtendibleCallSpec,
    control: SeriesControl = SeriesControl(),
    tol: float = 1e-12,
) -> CriticalValues:
    """Solve for (L, M) from the indifference conditions at ``T1``."""
    t1, t2 = spec.expiry1, spec.expiry2

    def cont(s):
        return call_value(params, s, spec.strike2, t1, t2, control)

    start = spec.premium + spec.strike2 * math.exp(-params.r * (t2 - t1))
    far_gap = spec.strike1 - start if params.q == 0.0 else None
    return _solve_stage(cont, spec.strike1, spec.premium, start, tol, far_gap)


def critical_value_residuals(
    params: ModelParams,
    spec: ExtendibleCallSpec,
    levels: Tuple[float, float],
    control: SeriesControl = SeriesControl(),
) -> Tuple[float, float]:
    """``(C(L) - A, M - K1 - C(M) + A)``; both vanish at the solved values."""
    lo, hi = levels
    t1, t2 = spec.expiry1, spec.expiry2
    c_lo = call_value(params, lo, spec.strike2, t1, t2, control) if lo > 0 else 0.0
    res_hi = math.nan
    if math.isfinite(hi):
        res_hi = hi - spec.strike1 - call_value(params, hi, spec.strike2, t1, t2, control) \
            + spec.premium
    return c_lo - spec.premium, res_hi


def extendible_call_price(
    params: ModelParams,
    s0: float,
    spec: ExtendibleCallSpec,
    control: SeriesControl = SeriesControl(),
) -> PriceResult:
    """One-extension call price at ``spec.valuation_time``.

    ``details`` holds the four blocks of the series separately: exercise at
    ``T1``, extension given ``S1 >= L``, extension given ``S1 >= M`` (to be
    subtracted) and the premium leg (to be subtracted).
    """
    if not s0 > 0.0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    levels = spec.critical_values or critical_values(params, spec, control)
    lo, hi = levels
    t0, t1, t2 = spec.valuation_time, spec.expiry1, spec.expiry2
    k1, k2, prem = spec.strike1, spec.strike2, spec.premium

    half = control.split(2)
    w1 = poisson_weights(params.series_intensity * (t1 - t0), half)
    w2 = poisson_weights(params.series_intensity * (t2 - t1), half)
    n1 = w1.counts[:, None]
    m = n1 + w2.counts[None, :]
    mom1 = conditional_moments(params, TimeWindow(t0, t1), n1)
    mom2 = conditional_moments(params, TimeWindow(t0, t2), m)
    sd1, sd2 = np.sqrt(mom1.variance), np.sqrt(mom2.variance)

    def pair(log_ratio, mom, sd):
        return (standardize(log_ratio + mom.mean + mom.variance, sd),
                standardize(log_ratio + mom.mean, sd))

    a1, a2 = pair(_log_ratio(s0, hi), mom1, sd1)
    b1, b2 = pair(_log_ratio(s0, lo), mom1, sd1)
    c1, c2 = pair(_log_ratio(s0, k2), mom2, sd2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(sd2 > 0.0, np.sqrt(mom1.variance / mom2.variance), 0.0)
    shape = m.shape
    rho = np.broadcast_to(rho, shape)
    a1, a2, b1, b2 = (np.broadcast_to(x, shape) for x in (a1, a2, b1, b2))

    spot1 = s0 * math.exp(-params.q * (t1 - t0))
    spot2 = s0 * math.exp(-params.q * (t2 - t0))
    disc1 = jump_discount(params, t1 - t0, w1.counts)
    disc2 = k2 * jump_discount(params, t2 - t0, m)
    a1v, a2v, b2v = a1[:, 0], a2[:, 0], b2[:, 0]

    exercise = float(w1.weights @ (spot1 * ndtr(a1v) - k1 * disc1 * ndtr(a2v)))
    ext_l = spot2 * binorm_cdf(b1, c1, rho) - disc2 * binorm_cdf(b2, c2, rho)
    ext_m = spot2 * binorm_cdf(a1, c1, rho) - disc2 * binorm_cdf(a2, c2, rho)
    ext_l = float(w1.weights @ ext_l @ w2.weights)
    ext_m = float(w1.weights @ ext_m @ w2.weights)
    premium_leg = float(w1.weights @ (prem * disc1 * (ndtr(b2v) - ndtr(a2v))))

    # identical blocks (L = M) cancel exactly before the other terms are added
    value = exercise + (ext_l - ext_m) - premium_leg
    flags = frozenset({SERIES_CAP}) if (w1.capped or w2.capped) else frozenset()
    details = {
        "L": lo, "M": hi,
        "exercise": exercise, "extend_above_L": ext_l,
        "extend_above_M": ext_m, "premium_leg": premium_leg,
    }
    return PriceResult(max(value, 0.0), (len(w1), len(w2)),
                       w1.shortfall + w2.shortfall, flags, details)


def mfbm_extendible_price(
    params: ModelParams,
    s0: float,
    spec: ExtendibleCallSpec,
) -> PriceResult:
    """Closed form for the jump-free model (single term, no series)."""
    if params.lam != 0.0:
        raise ValueError("mfbm_extendible_price needs lam = 0")
    if params.sigma == 0.0:
        raise DegenerateModelError("closed form needs sigma > 0")
    lo, hi = spec.critical_values or critical_values(params, spec)
    t0, t1, t2 = spec.valuation_time, spec.expiry1, spec.expiry2
    r, q, sig, h2 = params.r, params.q, params.sigma, 2.0 * params.hurst
    tau1, tau2 = t1 - t0, t2 - t0
    s2 = sig**2
    v1 = s2 * tau1 + s2 * (t1**h2 - t0**h2)
    v2 = s2 * tau2 + s2 * (t2**h2 - t0**h2)
    sd1, sd2 = math.sqrt(v1), math.sqrt(v2)
    rho = math.sqrt(v1 / v2)

    def thresholds(level, tau, v, sd):
        # (d1, d2) for the event S_T >= level
        if level == 0.0:
            return math.inf, math.inf
        if level == math.inf:
            return -math.inf, -math.inf
        x = math.log(s0 / level) + ((r - q) * tau - 0.5 * v)
        return (x + v) / sd, x / sd

    a1, a2 = thresholds(hi, tau1, v1, sd1)
    b1, b2 = thresholds(lo, tau1, v1, sd1)
    c1, c2 = thresholds(spec.strike2, tau2, v2, sd2)
    f1 = s0 * math.exp(-q * tau1)
    f2 = s0 * math.exp(-q * tau2)
    k1d = spec.strike1 * math.exp(-r * tau1)
    k2d = spec.strike2 * math.exp(-r * tau2)

    exercise = f1 * ndtr(a1) - k1d * ndtr(a2)
    above_l = f2 * binorm_cdf(b1, c1, rho) - k2d * binorm_cdf(b2, c2, rho)
    above_m = f2 * binorm_cdf(a1, c1, rho) - k2d * binorm_cdf(a2, c2, rho)
    premium = spec.premium * math.exp(-r * tau1) * (ndtr(b2) - ndtr(a2))
    value = exercise + (above_l - above_m) - premium
    return PriceResult(max(float(value), 0.0), (1, 1), 0.0, frozenset(), {"L": lo, "M": hi})


# ---------------------------------------------------------------------------
# N extensions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtensionStage:
    """One maturity in an extension schedule.

    ``premium`` is paid at the previous stage's expiry to roll into this one.
    """

    expiry: float
    strike: float
    premium: float = 0.0


@dataclass(frozen=True)
class NExtendibleSpec:
    """Schedule ``T1 < ... < T_{N+1}`` with ``N <= 3`` optional extensions."""

    stages: Tuple[ExtensionStage, ...]
    valuation_time: float = 0.0
    critical_values: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if len(stages) < 2:
            raise ValueError("need at least two stages (one extension)")
        if len(stages) > MAX_DIMENSION:
            raise UnsupportedDimensionError(
                f"{len(stages) - 1} extensions need dimension {len(stages)} > {MAX_DIMENSION}"
            )
        if stages[0].premium != 0.0:
            raise ValueError("the first stage carries no premium")
        times = [self.valuation_time] + [s.expiry for s in stages]
        if not all(a < b for a, b in zip(times, times[1:])) or times[0] < 0:
            raise ValueError("expiries must be strictly increasing after the valuation time")
        if any(not s.strike > 0 or s.premium < 0 for s in stages):
            raise ValueError("strikes must be > 0 and premiums >= 0")
        if self.critical_values is not None:
            cv = tuple(CriticalValues(float(a), float(b)) for a, b in self.critical_values)
            if len(cv) != len(stages) - 1 or any(not 0 <= a <= b for a, b in cv):
                raise ValueError("need one (L, M) pair with 0 <= L <= M per extension")
            object.__setattr__(self, "critical_values", cv)

    @property
    def extensions(self) -> int:
        return len(self.stages) - 1

    def tail(self, first: int) -> "NExtendibleSpec":
        """Sub-schedule starting at stage index ``first``, valued at the previous expiry."""
        stages = self.stages[first:]
        stages = (ExtensionStage(stages[0].expiry, stages[0].strike, 0.0),) + stages[1:]
        cv = self.critical_values[first:] if self.critical_values is not None else None
        return NExtendibleSpec(stages, self.stages[first - 1].expiry, cv)


def n_extendible_critical_values(
    params: ModelParams,
    nspec: NExtendibleSpec,
    control: SeriesControl = SeriesControl(),
    tol: float = 1e-12,
) -> Tuple[CriticalValues, ...]:
    """Critical values for every decision date by backward induction.

    A date where extension is never optimal is encoded as ``L = M = K_j``
    (exercise above the strike, abandon below); a date where exercise is never
    optimal gets ``M = inf``.
    """
    stages = nspec.stages
    n = nspec.extensions
    solved: list = [None] * n
    for j in range(n - 1, -1, -1):
        nxt = stages[j + 1]
        t_j = stages[j].expiry
        if j == n - 1:
            def cont(s, nxt=nxt, t_j=t_j):
                return call_value(params, s, nxt.strike, t_j, nxt.expiry, control)
        else:
            sub_stages = (ExtensionStage(nxt.expiry, nxt.strike, 0.0),) + stages[j + 2:]
            sub = NExtendibleSpec(sub_stages, t_j, tuple(solved[j + 1:]))

            def cont(s, sub=sub):
                return _n_extendible_value(params, s, sub, sub.critical_values, control)[0]
        start = nxt.premium + nxt.strike * math.exp(-params.r * (nxt.expiry - t_j))
        try:
            # deep in the money the continuation is the forward on the next strike
            far_gap = stages[j].strike - start if params.q == 0.0 else None
            solved[j] = _solve_stage(cont, stages[j].strike, nxt.premium, start, tol, far_gap)
        except NoExtensionRegionError as exc:
            if "M is infinite" in str(exc):
                lower = _solve_stage_lower_only(cont, nxt.premium, start, tol)
                solved[j] = CriticalValues(lower, math.inf)
            else:
                solved[j] = CriticalValues(stages[j].strike, stages[j].strike)
    return tuple(solved)


def _solve_stage_lower_only(cont, premium, start, tol):
    if premium == 0.0:
        return 0.0

    def keep(s):
        return cont(s) - premium
    br = expand_bracket(keep, start, increasing=True, lower_limit=1e-300)
    return find_root(keep, br, x_tol=4e-16 * start, f_tol=tol)


def _rect2(lo, hi, rho):
    # vectorised bivariate rectangle with per-row correlation
    p = (binorm_cdf(hi[:, 0], hi[:, 1], rho) - binorm_cdf(lo[:, 0], hi[:, 1], rho)
         - binorm_cdf(hi[:, 0], lo[:, 1], rho) + binorm_cdf(lo[:, 0], lo[:, 1], rho))
    empty = (lo[:, 0] >= hi[:, 0]) | (lo[:, 1] >= hi[:, 1])
    return np.where(empty, 0.0, np.maximum(p, 0.0))


def _prune(combos, weight, budget):
    """Drop the lightest jump-count combinations whose total weight fits in ``budget``.

    The multivariate terms cost one quadrature each, and in three or more
    dimensions most of the rectangular grid carries negligible mass.
    """
    order = np.argsort(weight, kind="stable")
    light = np.cumsum(weight[order]) <= budget
    keep = np.sort(order[~light])
    return combos[keep], weight[keep], float(weight[order[light]].sum())


def _n_extendible_value(params, s0, nspec, levels, control):
    stages = nspec.stages
    n_stages = len(stages)
    t0 = nspec.valuation_time
    times = np.array([s.expiry for s in stages])
    # half the tolerance for the per-date Poisson tails, half for pruning
    sub = control.split(2 * n_stages)
    prune_budget = 0.5 * control.tail_tolerance / max(n_stages - 2, 1)
    starts = np.concatenate([[t0], times[:-1]])
    pws = [poisson_weights(params.series_intensity * (b - a), sub) for a, b in zip(starts, times)]

    log_lo = np.array([_log_ratio(s0, lv.lower) for lv in levels])
    log_hi = np.array([_log_ratio(s0, lv.upper) for lv in levels]
                      + [math.log(s0 / stages[-1].strike)])
    # S_i >= level  <=>  Z_i >= -(ln(s0/level) + mean_i) / sd_i
    value = 0.0
    pruned = 0.0
    for j in range(1, n_stages + 1):
        combos = np.array(list(itertools.product(*(range(len(p)) for p in pws[:j]))))
        weight = np.prod([pws[i].weights[combos[:, i]] for i in range(j)], axis=0)
        if j > 2:
            combos, weight, dropped = _prune(combos, weight, prune_budget)
            pruned += dropped
        cum = np.cumsum(combos, axis=1)
        var = np.empty(cum.shape)
        mean = np.empty(cum.shape)
        for i in range(j):
            mom = conditional_moments(params, TimeWindow(t0, times[i]), cum[:, i])
            var[:, i], mean[:, i] = mom.variance, mom.mean
        sd = np.sqrt(var)

        def box(shift):
            lo = np.empty(cum.shape)
            hi = np.empty(cum.shape)
            mu = mean + shift
            for i in range(j - 1):
                lo[:, i] = -standardize(log_lo[i] + mu[:, i], sd[:, i])
                hi[:, i] = -standardize(log_hi[i] + mu[:, i], sd[:, i])
            return lo, hi, mu

        stage = stages[j - 1]
        last = j - 1
        spot = s0 * math.exp(-params.q * (times[last] - t0))
        disc = jump_discount(params, times[last] - t0, cum[:, last])
        premium_next = stages[j].premium if j < n_stages else 0.0

        lo_s, hi_s, mu_s = box(var)
        lo_p, hi_p, mu_p = box(0.0)
        rows = []
        for lo, hi, mu in ((lo_s, hi_s, mu_s), (lo_p, hi_p, mu_p)):
            lo, hi = lo.copy(), hi.copy()
            lo[:, last] = -standardize(log_hi[last] + mu[:, last], sd[:, last])
            hi[:, last] = np.inf
            rows.append((lo, hi))
        if premium_next > 0.0:
            lo, hi = lo_p.copy(), hi_p.copy()
            lo[:, last] = -standardize(log_lo[last] + mu_p[:, last], sd[:, last])
            hi[:, last] = -standardize(log_hi[last] + mu_p[:, last], sd[:, last])
            rows.append((lo, hi))

        if j == 1:
            probs = [np.maximum(ndtr(h[:, 0]) - ndtr(l[:, 0]), 0.0) for l, h in rows]
        elif j == 2:
            with np.errstate(divide="ignore", invalid="ignore"):
                rho = np.where(var[:, 1] > 0, np.sqrt(var[:, 0] / var[:, 1]), 0.0)
            probs = [_rect2(l, h, rho) for l, h in rows]
        else:
            probs = [np.empty(len(combos)) for _ in rows]
            for c in range(len(combos)):
                corr = np.eye(j)
                for a in range(j):
                    for b in range(a + 1, j):
                        corr[a, b] = corr[b, a] = log_return_correlation(
                            params, t0, times[a], times[b], cum[c, a], cum[c, b])
                out = mvn_rectangle(np.array([l[c] for l, _ in rows]),
                                    np.array([h[c] for _, h in rows]), corr)
                for p, v in zip(probs, out):
                    p[c] = v

        term = spot * probs[0] - stage.strike * disc * probs[1]
        if premium_next > 0.0:
            term = term - premium_next * disc * probs[2]
        value += float(weight @ term)

    capped = any(p.capped for p in pws)
    shortfall = sum(p.shortfall for p in pws) + pruned
    return value, tuple(len(p) for p in pws), shortfall, capped


def n_extendible_price(
    params: ModelParams,
    s0: float,
    nspec: NExtendibleSpec,
    control: SeriesControl = SeriesControl(),
) -> PriceResult:
    """Price of a call with up to three holder extensions."""
    if not s0 > 0.0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    levels = nspec.critical_values or n_extendible_critical_values(params, nspec, control)
    value, terms, shortfall, capped = _n_extendible_value(params, s0, nspec, levels, control)
    flags = frozenset({SERIES_CAP}) if capped else frozenset()
    return PriceResult(max(value, 0.0), terms, shortfall, flags,
                       {"critical_values": tuple(levels)})


def richardson_extrapolate(ec0: float, ec1: float) -> float:
    """Two-point Richardson limit ``2*ec1 - ec0``.

    The CLI table passes the ``H = 1/2`` price as ``ec0`` and the full model
    price as ``ec1``.
    """
    return 2.0 * ec1 - ec0
