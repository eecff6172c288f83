import math

import numpy as np
import pytest

from zhangpile import ModelParams, OneSiteDistribution, RunConfig, renewal_oracle, simulate_stationary
from zhangpile.onesite import _adaptive_simpson


class TestClosedForm:
    def test_unit_interval_normalization(self):
        d = OneSiteDistribution(1.0)
        assert d.f0 == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert d.cdf(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_exponential_branch_below_b(self):
        for b in (1.0, 0.5, 0.3):
            d = OneSiteDistribution(b)
            for h in (0.1 * b, 0.5 * b, 0.99 * b, b):
                assert d.cdf(h) == pytest.approx(d.f0 * math.exp(h / b), rel=1e-12)

    def test_support_boundaries(self):
        d = OneSiteDistribution(0.5)
        assert d.cdf(-0.5) == 0.0
        assert d.cdf(2.0) == 1.0
        assert d.cdf(0.0) == d.f0

    def test_continuous_at_b(self):
        for b in (0.5, 0.25):
            d = OneSiteDistribution(b)
            assert d.cdf(b - 1e-12) == pytest.approx(d.cdf(b + 1e-12), abs=1e-9)

    def test_nondecreasing_on_grid(self):
        for b in (1.0, 0.5, 0.1):
            d = OneSiteDistribution(b)
            vals = d.cdf(np.linspace(0.0, 1.0, 10_001))
            assert np.all(np.diff(vals) >= -1e-12)
        d = OneSiteDistribution(0.01)
        vals = d.cdf(np.linspace(0.0, 1.0, 501))
        assert np.all(np.diff(vals) >= -1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            OneSiteDistribution(0.0)
        with pytest.raises(ValueError):
            OneSiteDistribution(1.5)


class TestDensity:
    def test_exponential_branch(self):
        d = OneSiteDistribution(0.5)
        for h in (0.1, 0.3, 0.49):
            assert d.pdf(h) == pytest.approx(d.f0 / d.b * math.exp(h / d.b), rel=1e-12)

    def test_jump_at_b(self):
        d = OneSiteDistribution(0.5)
        left = d.pdf(0.5, side="-")
        right = d.pdf(0.5, side="+")
        assert left == pytest.approx(d.f0 / d.b * math.e, rel=1e-12)
        assert left - right == pytest.approx(d.f0 / d.b, rel=1e-12)

    def test_integrates_to_continuous_mass(self):
        for b in (1.0, 0.5, 0.2):
            d = OneSiteDistribution(b)
            knots = [0.0] + [k * b for k in range(1, int(1 / b) + 1) if k * b < 1.0] + [1.0]
            total = sum(
                _adaptive_simpson(d.pdf, lo, hi, tol=1e-10)
                for lo, hi in zip(knots[:-1], knots[1:])
            )
            assert total == pytest.approx(1.0 - d.f0, abs=1e-8)

    def test_matches_cdf_slope(self):
        d = OneSiteDistribution(0.5)
        eps = 1e-6
        for h in (0.2, 0.4, 0.7, 0.9):
            slope = (d.cdf(h + eps) - d.cdf(h - eps)) / (2 * eps)
            assert slope == pytest.approx(d.pdf(h), abs=1e-6)

    def test_matches_cdf_slope_small_b(self):
        # extended-precision branch
        d = OneSiteDistribution(0.05)
        eps = 1e-7
        for h in (0.03, 0.2, 0.77):
            slope = (d.cdf(h + eps) - d.cdf(h - eps)) / (2 * eps)
            assert slope == pytest.approx(d.pdf(h), abs=1e-6)


class TestDelayResidual:
    @pytest.mark.parametrize("b", [1.0, 0.5, 0.1])
    def test_residual_small_on_grid(self, b):
        d = OneSiteDistribution(b)
        worst = max(abs(d.delay_residual(h)) for h in np.linspace(0.0, 1.0, 100))
        assert worst <= 1e-6

    def test_zero_at_origin(self):
        assert OneSiteDistribution(0.5).delay_residual(0.0) == 0.0

    @pytest.mark.parametrize("b", [1.0, 0.5, 0.1])
    def test_density_form(self, b):
        d = OneSiteDistribution(b)
        worst = max(abs(d.delay_residual_density(h)) for h in np.linspace(b, 1.0, 50))
        assert worst <= 1e-9


class TestRenewalOracle:
    def test_agrees_with_closed_form(self):
        rng = np.random.default_rng(10)
        hs = np.linspace(0.0, 1.0, 21)
        for b in (1.0, 0.5, 0.1):
            d = OneSiteDistribution(b)
            est = renewal_oracle(b, hs, 1_000_000, rng)
            gap = np.abs(est.estimate - d.cdf(hs))
            assert np.all(gap <= 3.0 * est.stderr + 1e-12), f"b={b}"

    def test_h_one_is_exact(self):
        est = renewal_oracle(0.5, 1.0, 100, np.random.default_rng(0))
        assert est.estimate == 1.0
        assert est.stderr == 0.0

    def test_scalar_interface(self):
        est = renewal_oracle(0.5, 0.3, 10_000, np.random.default_rng(1))
        assert isinstance(est.estimate, float)
        assert 0.0 < est.estimate < 1.0

    def test_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            renewal_oracle(0.5, 0.3, 0, rng)
        with pytest.raises(ValueError):
            renewal_oracle(0.5, 1.5, 10, rng)


class TestChainAgreement:
    def test_empirical_cdf_matches_closed_form(self):
        cfg = RunConfig(
            params=ModelParams(n_sites=1, a=0.0, b=0.5),
            steps=200_000,
            seed=3,
            trace_site=0,
        )
        stats = simulate_stationary(cfg)
        d = OneSiteDistribution(0.5)
        assert d.sup_distance_to_samples(stats.trace) <= 0.02

    def test_zero_atom_frequency(self):
        cfg = RunConfig(
            params=ModelParams(n_sites=1, a=0.0, b=0.5),
            steps=200_000,
            seed=4,
        )
        stats = simulate_stationary(cfg)
        d = OneSiteDistribution(0.5)
        se = stats.zero_freq_stderr(0)
        assert abs(stats.per_site_zero_freq[0] - d.f0) <= 3.0 * se
