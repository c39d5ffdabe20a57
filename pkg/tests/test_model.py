import math

import numpy as np
import pytest

import oracles
from jmfbm import (
    ModelParams,
    SeriesControl,
    TimeWindow,
    conditional_moments,
    jump_discount,
    log_return_correlation,
    poisson_weights,
)
from jmfbm.errors import DegenerateModelError


class TestModelParams:
    def test_defaults_and_derived(self):
        p = ModelParams(r=0.05, sigma=0.2, hurst=0.6, lam=2.0, k=0.1, sigma_j=0.3)
        assert p.q == 0.0
        assert p.lambda_prime == pytest.approx(2.2)
        assert p.mu_j == pytest.approx(math.log(1.1) - 0.045)

    @pytest.mark.parametrize("field,value", [
        ("hurst", 0.0), ("hurst", 1.0), ("sigma", -0.1), ("lam", -1.0),
        ("k", -1.0), ("sigma_j", -0.01), ("r", math.nan),
    ])
    def test_rejects_invalid(self, field, value):
        base = dict(r=0.05, sigma=0.2, hurst=0.6)
        base[field] = value
        with pytest.raises(ValueError):
            ModelParams(**base)

    def test_replace_keeps_other_fields(self, jump_params):
        p = jump_params.replace(hurst=0.5)
        assert p.hurst == 0.5 and p.lam == jump_params.lam and p.k == jump_params.k


class TestTimeWindow:
    def test_length(self):
        assert TimeWindow(0.25, 1.0).length == 0.75

    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (1.0, 0.5), (-0.1, 1.0)])
    def test_rejects_bad_order(self, a, b):
        with pytest.raises(ValueError):
            TimeWindow(a, b)


class TestConditionalMoments:
    def test_brownian_case(self):
        # H = 1/2: both components are Brownian, variance doubles
        p = ModelParams(r=0.03, sigma=0.2, hurst=0.5)
        mom = conditional_moments(p, TimeWindow(0.0, 2.0), 0)
        assert mom.variance == pytest.approx(2 * 0.04 * 2.0, rel=1e-15)
        assert mom.mean == pytest.approx(0.03 * 2 - 0.5 * mom.variance, rel=1e-15)

    def test_fractional_window(self):
        p = ModelParams(r=0.0, sigma=0.3, hurst=0.8)
        mom = conditional_moments(p, TimeWindow(0.5, 1.5), 0)
        expected = 0.09 * 1.0 + 0.09 * (1.5**1.6 - 0.5**1.6)
        assert mom.variance == pytest.approx(expected, rel=1e-14)

    def test_jump_terms_add_linearly(self, jump_params):
        w = TimeWindow(0.0, 1.0)
        base = conditional_moments(jump_params, w, 0)
        mom = conditional_moments(jump_params, w, np.arange(4))
        np.testing.assert_allclose(mom.variance - base.variance,
                                   np.arange(4) * jump_params.sigma_j**2, rtol=1e-14)
        np.testing.assert_allclose(mom.mean - base.mean,
                                   np.arange(4) * jump_params.mu_j, rtol=1e-14)

    def test_martingale_mixture(self, jump_params):
        # sum over n of P(N=n) E[S_T/S_0 | n] must equal exp((r-q) T)
        t = 1.3
        w = TimeWindow(0.0, t)
        lam_t = jump_params.lam * t
        total = 0.0
        for n in range(80):
            mom = conditional_moments(jump_params, w, n)
            total += oracles.poisson_pmf(n, lam_t) * math.exp(mom.mean + 0.5 * mom.variance)
        assert total == pytest.approx(math.exp(jump_params.r * t), rel=1e-13)

    def test_negative_count_rejected(self, jump_params):
        with pytest.raises(ValueError):
            conditional_moments(jump_params, TimeWindow(0, 1), -1)


class TestCorrelation:
    def test_brownian_square_root_rule(self):
        p = ModelParams(r=0.0, sigma=0.2, hurst=0.5)
        assert log_return_correlation(p, 0.0, 1.0, 4.0, 0, 0) == pytest.approx(0.5, rel=1e-15)

    def test_in_unit_interval(self, jump_params):
        rho = log_return_correlation(jump_params, 0.2, 0.7, 1.5, np.arange(3)[:, None],
                                     np.arange(3)[:, None] + np.arange(3))
        assert np.all((rho > 0) & (rho <= 1))

    def test_zero_variance_raises(self):
        p = ModelParams(r=0.0, sigma=0.0, hurst=0.5)
        with pytest.raises(DegenerateModelError):
            log_return_correlation(p, 0.0, 1.0, 2.0, 0, 0)

    def test_needs_nested_counts(self, jump_params):
        with pytest.raises(ValueError):
            log_return_correlation(jump_params, 0.0, 1.0, 2.0, 2, 1)


class TestJumpDiscount:
    def test_weighted_sum_recovers_plain_discount(self, jump_params):
        # the lam(1+k) weights times the jump discount give lam weights times e^{-r dt}
        dt = 0.8
        n = np.arange(60)
        w_prime = np.array([oracles.poisson_pmf(i, jump_params.lambda_prime * dt) for i in n])
        w = np.array([oracles.poisson_pmf(i, jump_params.lam * dt) for i in n])
        np.testing.assert_allclose(w_prime * jump_discount(jump_params, dt, n),
                                   w * math.exp(-jump_params.r * dt), rtol=1e-12, atol=1e-300)


class TestPoissonWeights:
    @pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 30.0])
    def test_matches_pmf(self, x):
        pw = poisson_weights(x)
        expected = [oracles.poisson_pmf(n, x) for n in range(len(pw))]
        np.testing.assert_allclose(pw.weights, expected, rtol=1e-12)
        assert pw.shortfall < 1e-12
        assert not pw.capped

    def test_zero_rate_single_term(self):
        pw = poisson_weights(0.0)
        assert len(pw) == 1 and pw.weights[0] == 1.0 and pw.shortfall == 0.0

    def test_cap_is_flagged(self):
        pw = poisson_weights(50.0, SeriesControl(max_terms=10))
        assert pw.capped and len(pw) == 10 and pw.shortfall > 0.9

    def test_iteration(self):
        pairs = list(poisson_weights(0.5))
        assert pairs[0][0] == 0 and pairs[0][1] == pytest.approx(math.exp(-0.5))

    def test_split_control(self):
        c = SeriesControl(1e-10, 50).split(2)
        assert c.tail_tolerance == 5e-11 and c.max_terms == 50

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            poisson_weights(-1.0)
