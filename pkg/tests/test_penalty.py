import math

import numpy as np
import pytest

from lpocv.bases import make_histogram_model, make_trig_model
from lpocv.estimator import Sample, empirical_contrast, fit_projection
from lpocv.lpo import lpo_risk_closed
from lpocv.penalty import (expected_ideal_penalty, expected_lpo_penalty,
                           log_factor_target_p, lpo_penalty, overpen_factor,
                           p_for_log_factor)
from lpocv.quadrature import midpoint_nodes
from lpocv.simulation import density_moments, uniform_density
from tests.conftest import assorted_models

UNIFORM = uniform_density()


class TestDecomposition:
    def test_constant_basis_has_zero_penalty(self, three_points):
        dec = lpo_penalty(make_histogram_model(1), three_points, 2)
        assert (dec.empirical_risk, dec.lpo_penalty, dec.lpo_risk) == (-1.0, 0.0, -1.0)

    def test_worked_examples(self, three_points):
        m = make_histogram_model(2)
        dec1 = lpo_penalty(m, three_points, 1)
        assert dec1.empirical_risk == pytest.approx(-10 / 9, abs=1e-12)
        assert dec1.lpo_risk == pytest.approx(0.0, abs=1e-12)
        assert dec1.lpo_penalty == pytest.approx(10 / 9, abs=1e-12)
        dec2 = lpo_penalty(m, three_points, 2)
        assert dec2.lpo_penalty == pytest.approx(16 / 9, abs=1e-12)

    def test_identity_is_exact(self):
        rng = np.random.default_rng(41)
        for model in assorted_models():
            n = int(rng.integers(3, 40))
            sample = Sample(rng.random(n))
            for p in (1, n // 2 or 1, n - 1):
                dec = lpo_penalty(model, sample, p)
                assert dec.lpo_risk == dec.empirical_risk + dec.lpo_penalty  # bit exact
                assert dec.lpo_risk == pytest.approx(
                    lpo_risk_closed(model, sample, p).value, abs=1e-12)

    def test_empirical_risk_matches_estimator_module(self):
        rng = np.random.default_rng(42)
        sample = Sample(rng.random(30))
        for model in assorted_models()[:6]:
            dec = lpo_penalty(model, sample, 3)
            direct = empirical_contrast(fit_projection(model, sample), sample)
            assert dec.empirical_risk == pytest.approx(direct, abs=1e-12)


class TestExpectedPenalties:
    def test_constant_basis_zero(self):
        bm = density_moments(UNIFORM, make_histogram_model(1))
        assert expected_ideal_penalty(bm, 7) == 0.0
        assert expected_lpo_penalty(bm, 7, 3) == 0.0

    def test_uniform_histogram_examples(self):
        bm = density_moments(UNIFORM, make_histogram_model(2))
        assert expected_ideal_penalty(bm, 4) == pytest.approx(0.5, abs=1e-12)
        assert expected_lpo_penalty(bm, 4, 2) == pytest.approx(0.75, abs=1e-12)

    def test_uniform_trig_example(self):
        bm = density_moments(UNIFORM, make_trig_model(1))
        assert expected_ideal_penalty(bm, 10) == pytest.approx(0.4, abs=1e-12)

    def test_gap_formula(self):
        # E[pen_p] - E[idpen] = p/(n(n-p)) * sum Var >= 0
        bm = density_moments(UNIFORM, make_histogram_model(2))
        n, p = 4, 2
        gap = expected_lpo_penalty(bm, n, p) - expected_ideal_penalty(bm, n)
        assert gap == pytest.approx(0.25, abs=1e-12)
        assert gap == pytest.approx(p / (n * (n - p)) * bm.var_sum(), abs=1e-14)

    def test_ratio_equals_overpen_factor(self):
        rng = np.random.default_rng(43)
        bm = density_moments(UNIFORM, make_histogram_model(5))
        for _ in range(25):
            n = int(rng.integers(2, 200))
            p = int(rng.integers(1, n))
            ratio = expected_lpo_penalty(bm, n, p) / expected_ideal_penalty(bm, n)
            assert ratio == pytest.approx(overpen_factor(n, p), abs=1e-14)

    def test_monte_carlo_penalty_means(self):
        # sample mean of pen_p against the formula; the per-replication ideal
        # penalty needs the known density: idpen = P gamma(shat) - P_n gamma(shat)
        rng = np.random.default_rng(44)
        n, p, D, reps = 18, 9, 3, 4000
        model = make_histogram_model(D)
        bm = density_moments(UNIFORM, model)
        grid = midpoint_nodes(2 ** 12)
        pens = np.empty(reps)
        ideals = np.empty(reps)
        for rep in range(reps):
            sample = Sample(rng.random(n))
            dec = lpo_penalty(model, sample, p)
            pens[rep] = dec.lpo_penalty
            est = fit_projection(model, sample)
            vals = est.coeffs @ model.eval_all(grid)
            p_gamma = est.norm_sq() - 2.0 * float(vals.mean())  # uniform density
            ideals[rep] = p_gamma - dec.empirical_risk
        for observed, expected in ((pens, expected_lpo_penalty(bm, n, p)),
                                   (ideals, expected_ideal_penalty(bm, n))):
            se = observed.std(ddof=1) / math.sqrt(reps)
            assert abs(observed.mean() - expected) < 4 * se


class TestOverpenFactor:
    def test_quoted_values(self):
        for n in (4, 10, 256):
            assert overpen_factor(n, 1) == pytest.approx(1 + 1 / (2 * n - 2), abs=1e-15)
            assert overpen_factor(n, n // 2) == 1.5
        assert overpen_factor(4, 2) == 1.5

    def test_strictly_increasing_in_p(self):
        n = 60
        factors = [overpen_factor(n, p) for p in range(1, n)]
        assert all(b > a for a, b in zip(factors, factors[1:]))

    def test_p_equals_n_rejected(self):
        with pytest.raises(ValueError):
            overpen_factor(10, 10)


class TestLogFactorTuning:
    def test_exact_identity_before_rounding(self):
        for n in (10, 100, 10 ** 4):
            p_star = log_factor_target_p(n)
            c = (2 * n - p_star) / (2 * n - 2 * p_star)
            assert c == pytest.approx(math.log(n), rel=1e-15)

    def test_n_100_rounds_near_87(self):
        p_star = log_factor_target_p(100)
        assert 87.0 < p_star < 88.0
        p_int, factor = p_for_log_factor(100)
        assert p_int in (87, 88)
        assert factor == overpen_factor(100, p_int)

    def test_rounded_factor_within_five_percent(self):
        for n in range(50, 2001, 75):
            _, factor = p_for_log_factor(n)
            assert abs(factor - math.log(n)) / math.log(n) < 0.05

    def test_clamped_to_valid_range(self):
        p_int, _ = p_for_log_factor(3)
        assert 1 <= p_int <= 2
        with pytest.raises(ValueError):
            p_for_log_factor(2)
