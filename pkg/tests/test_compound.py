import math

import numpy as np
import pytest
from scipy.optimize import brentq

import oracles
from jmfbm import (
    CompoundCallSpec,
    ModelParams,
    SeriesControl,
    TimeWindow,
    VanillaCallSpec,
    call_price,
    call_value,
    compound_call_price,
    critical_price,
)
from jmfbm.errors import BracketError


def inner_call_oracle(p, k, t1, t2):
    diff_var = p.sigma**2 * (t2 - t1) + p.sigma**2 * (t2 ** (2 * p.hurst) - t1 ** (2 * p.hurst))
    return lambda s: oracles.mixture_call(s, k, t2 - t1, p.r, diff_var, p.lam, p.k, p.sigma_j)


class TestCriticalPrice:
    def test_zero_strike_sentinel(self, jump_params):
        cp = critical_price(jump_params, CompoundCallSpec(0.0, 0.5, 100.0, 1.0))
        assert cp.value == 0.0

    def test_small_strike_goes_to_zero(self, jump_params):
        a = critical_price(jump_params, CompoundCallSpec(1e-3, 0.5, 100.0, 1.0)).value
        b = critical_price(jump_params, CompoundCallSpec(1e-6, 0.5, 100.0, 1.0)).value
        assert 0 < b < a < 100.0

    def test_deterministic_limit(self):
        p = ModelParams(r=0.05, sigma=0.0, hurst=0.6)
        s = CompoundCallSpec(7.0, 0.5, 100.0, 1.5)
        assert critical_price(p, s).value == pytest.approx(7.0 + 100.0 * math.exp(-0.05), rel=1e-12)

    def test_round_trip(self, jump_params):
        s = CompoundCallSpec(6.0, 0.5, 100.0, 1.2)
        cp = critical_price(jump_params, s)
        repriced = call_price(jump_params, cp.value, VanillaCallSpec(100.0, TimeWindow(0.5, 1.2))).value
        assert abs(repriced - 6.0) < 1e-9
        assert cp.residual <= 1e-12

    def test_matches_independent_solve(self, jump_params):
        s = CompoundCallSpec(4.0, 0.4, 90.0, 1.4)
        inner = inner_call_oracle(jump_params, 90.0, 0.4, 1.4)
        ref = brentq(lambda x: float(inner(x)) - 4.0, 1.0, 1000.0, xtol=1e-13)
        assert critical_price(jump_params, s).value == pytest.approx(ref, rel=1e-10)

    def test_unreachable_strike(self, jump_params):
        # the inner call never reaches a strike above the expansion ceiling
        with pytest.raises(BracketError):
            critical_price(jump_params, CompoundCallSpec(1e300, 0.5, 1.0, 1.0 + 1e-9))


class TestCompoundPrice:
    def test_zero_outer_strike_is_vanilla(self, jump_params):
        s = CompoundCallSpec(0.0, 0.5, 100.0, 1.0, valuation_time=0.1)
        van = call_price(jump_params, 100.0, VanillaCallSpec(100.0, TimeWindow(0.1, 1.0))).value
        assert abs(compound_call_price(jump_params, 100.0, s).value - van) < 1e-9

    def test_geske(self):
        p = ModelParams(r=0.06, sigma=0.2, hurst=0.5)
        s = CompoundCallSpec(8.0, 0.5, 100.0, 1.5)
        s_star = critical_price(p, s).value
        ref = oracles.geske_compound_call(105.0, 8.0, 0.5, 100.0, 1.5, 0.06, 2 * 0.04, s_star)
        assert abs(compound_call_price(p, 105.0, s).value - ref) < 1e-12

    @pytest.mark.parametrize("hurst,t0", [(0.5, 0.0), (0.8, 0.0), (0.3, 0.0), (0.7, 0.2)])
    def test_nested_expectation(self, jump_params, hurst, t0):
        # closed form = discounted expectation of (inner call - K1)^+ at T1
        p = jump_params.replace(hurst=hurst)
        s = CompoundCallSpec(6.0, 0.6, 100.0, 1.3, valuation_time=t0)
        s_star = critical_price(p, s).value
        inner = inner_call_oracle(p, 100.0, 0.6, 1.3)
        ref = oracles.expectation_at_t1(
            lambda x: np.maximum(inner(x) - 6.0, 0.0), 100.0, t0, 0.6,
            p.r, p.sigma, p.hurst, p.lam, p.k, p.sigma_j, breakpoints=[s_star])
        assert compound_call_price(p, 100.0, s).value == pytest.approx(ref, abs=1e-9)

    def test_no_jump_single_term(self):
        p = ModelParams(r=0.03, sigma=0.25, hurst=0.7)
        res = compound_call_price(p, 100.0, CompoundCallSpec(5.0, 0.5, 100.0, 1.0))
        assert res.terms_used == (1, 1) and res.tail_shortfall == 0.0

    def test_bounded_by_inner_call(self, jump_params):
        s = CompoundCallSpec(3.0, 0.5, 100.0, 1.0)
        van = call_price(jump_params, 100.0, VanillaCallSpec(100.0, TimeWindow(0, 1.0))).value
        v = compound_call_price(jump_params, 100.0, s).value
        assert 0.0 <= v <= van

    def test_worthless_underlying(self, jump_params):
        v = compound_call_price(jump_params, 1e-6, CompoundCallSpec(3.0, 0.5, 100.0, 1.0)).value
        assert v < 1e-12

    def test_details_report_critical_price(self, jump_params):
        res = compound_call_price(jump_params, 100.0, CompoundCallSpec(3.0, 0.5, 100.0, 1.0))
        assert res.details["critical_price"] > 0 and res.details["critical_residual"] <= 1e-12
        s_star = res.details["critical_price"]
        assert call_value(jump_params, s_star, 100.0, 0.5, 1.0) == pytest.approx(3.0, abs=1e-11)

    def test_dividends_lower_price(self, jump_params):
        s = CompoundCallSpec(3.0, 0.5, 100.0, 1.0)
        a = compound_call_price(jump_params, 100.0, s).value
        b = compound_call_price(jump_params.replace(q=0.03), 100.0, s).value
        assert b < a

    def test_cap_flagged(self, jump_params):
        res = compound_call_price(jump_params, 100.0, CompoundCallSpec(3.0, 0.5, 100.0, 1.0),
                                  SeriesControl(max_terms=2))
        assert res.flagged

    @pytest.mark.parametrize("kwargs", [
        dict(outer_strike=1.0, outer_expiry=1.0, inner_strike=100.0, inner_expiry=1.0),
        dict(outer_strike=-1.0, outer_expiry=0.5, inner_strike=100.0, inner_expiry=1.0),
        dict(outer_strike=1.0, outer_expiry=0.5, inner_strike=0.0, inner_expiry=1.0),
    ])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            CompoundCallSpec(**kwargs)
