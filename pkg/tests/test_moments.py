import math

import numpy as np
import pytest

from lpocv.bases import (make_haar_wavelet_model, make_histogram_model, make_trig_model)
from lpocv.estimator import Sample
from lpocv.lpo import lpo_risk_hist_fast
from lpocv.moments import (BasisMoments, exact_moments_oracle, hist_variance_poly,
                           lpo_bias, lpo_expectation, lpo_variance, risk_constant_part)
from lpocv.simulation import (PiecewiseConstantDensity, density_moments,
                              uniform_density)

UNIFORM = uniform_density()
TILTED = PiecewiseConstantDensity((0.5, 1.5), (0.0, 0.5, 1.0))
FOUR_PIECE = PiecewiseConstantDensity((1.6, 0.4, 0.8, 1.2), (0.0, 0.25, 0.5, 0.75, 1.0))


def constant_moments() -> BasisMoments:
    return density_moments(UNIFORM, make_histogram_model(1))


class TestExpectation:
    def test_constant_basis_always_minus_one(self):
        bm = constant_moments()
        for n, p in ((2, 1), (10, 5), (40, 39)):
            assert lpo_expectation(bm, n, p) == pytest.approx(-1.0, abs=1e-14)

    def test_uniform_histogram_worked_example(self):
        bm = density_moments(UNIFORM, make_histogram_model(2))
        assert lpo_expectation(bm, 4, 2) == pytest.approx(-0.5, abs=1e-12)

    def test_nondecreasing_in_p(self):
        bm = density_moments(TILTED, make_histogram_model(3))
        n = 12
        values = [lpo_expectation(bm, n, p) for p in range(1, n)]
        assert all(b >= a - 1e-14 for a, b in zip(values, values[1:]))

    def test_monte_carlo_mean(self):
        # empirical mean of the closed-form risk over 1e5 replications
        rng = np.random.default_rng(31)
        n, p, D, reps = 25, 10, 4, 10 ** 5
        x = rng.random((reps, n))
        idx = np.minimum((x * D).astype(np.int64), D - 1)
        counts = np.zeros((reps, D))
        np.add.at(counts, (np.arange(reps)[:, None], idx), 1)
        frac = counts / n
        risks = (D * ((2 * n - p) - n * (n - p + 1) * (frac ** 2).sum(axis=1))
                 / ((n - 1) * (n - p)))
        bm = density_moments(UNIFORM, make_histogram_model(D))
        mean = lpo_expectation(bm, n, p)
        var = lpo_variance(bm, n, p)
        se = math.sqrt(var / reps)
        assert abs(risks.mean() - mean) < 4 * se

    def test_invalid_p(self):
        bm = constant_moments()
        with pytest.raises(ValueError):
            lpo_expectation(bm, 5, 5)


class TestVariance:
    def test_constant_basis_is_zero(self):
        bm = constant_moments()
        assert lpo_variance(bm, 6, 2) == 0.0

    def test_all_mass_in_one_bin_gives_zero_polynomial(self):
        assert hist_variance_poly([1.0], [1.0], 5, 2) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_histogram_matches_oracle(self):
        model = make_histogram_model(2)
        bm = density_moments(UNIFORM, model)
        for p in (1, 2, 3):
            _, var = exact_moments_oracle(model, UNIFORM, 4, p)
            assert lpo_variance(bm, 4, p) == pytest.approx(var, abs=1e-10)

    def test_qpoly_matches_general_variance(self):
        rng = np.random.default_rng(32)
        for density in (UNIFORM, TILTED, FOUR_PIECE):
            for D in (1, 2, 3, 5):
                model = make_histogram_model(D)
                bm = density_moments(density, model)
                edges = model.cell_edges()
                alphas = np.diff(density.cdf(edges))
                omegas = np.diff(edges)
                for _ in range(4):
                    n = int(rng.integers(3, 40))
                    p = int(rng.integers(1, n))
                    a = lpo_variance(bm, n, p)
                    b = hist_variance_poly(alphas, omegas, n, p)
                    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    def test_variance_curve_is_quadratic_in_p(self):
        # three exact points pin the quadratic; a fourth must interpolate
        bm = density_moments(UNIFORM, make_histogram_model(2))
        n = 9
        scaled = [lpo_variance(bm, n, p) * (n * (n - 1) * (n - p)) ** 2
                  for p in (1, 2, 3, 4)]
        poly = np.polyfit([1, 2, 3], scaled[:3], 2)
        assert np.polyval(poly, 4) == pytest.approx(scaled[3], rel=1e-9)

    def test_nonuniform_wavelet_matches_oracle(self):
        # cross moments are nonzero here, so the sign convention is exercised
        model = make_haar_wavelet_model(1)
        bm = density_moments(FOUR_PIECE, model)
        for n in (4, 6):
            for p in range(1, n):
                mean, var = exact_moments_oracle(model, FOUR_PIECE, n, p)
                assert lpo_expectation(bm, n, p) == pytest.approx(mean, abs=1e-10)
                assert lpo_variance(bm, n, p) == pytest.approx(var, abs=1e-10)

    def test_monte_carlo_variance(self):
        rng = np.random.default_rng(33)
        n, p, D, reps = 20, 7, 3, 10 ** 5
        u = rng.random((reps, n))
        x = np.where(u < 0.25, u * 2.0, 0.5 + (u - 0.25) / 1.5)  # tilted sampler
        idx = np.minimum((x * D).astype(np.int64), D - 1)
        counts = np.zeros((reps, D))
        np.add.at(counts, (np.arange(reps)[:, None], idx), 1)
        frac = counts / n
        risks = (D * ((2 * n - p) * frac - n * (n - p + 1) * frac ** 2).sum(axis=1)
                 / ((n - 1) * (n - p)))
        bm = density_moments(TILTED, make_histogram_model(D))
        var = lpo_variance(bm, n, p)
        emp_var = risks.var(ddof=1)
        m4 = ((risks - risks.mean()) ** 4).mean()
        se_var = math.sqrt(max(m4 - emp_var ** 2, 0.0) / reps)
        assert abs(emp_var - var) < 4 * se_var


class TestBias:
    def test_constant_basis(self):
        assert lpo_bias(constant_moments(), 9, 4) == 0.0

    def test_uniform_histogram_worked_example(self):
        bm = density_moments(UNIFORM, make_histogram_model(2))
        assert lpo_bias(bm, 4, 2) == pytest.approx(0.25, abs=1e-12)

    def test_bias_identity_with_risk_constant(self):
        rng = np.random.default_rng(34)
        for density in (UNIFORM, TILTED, FOUR_PIECE):
            for model in (make_histogram_model(3), make_trig_model(1),
                          make_haar_wavelet_model(1)):
                bm = density_moments(density, model)
                for _ in range(3):
                    n = int(rng.integers(3, 30))
                    p = int(rng.integers(1, n))
                    lhs = lpo_expectation(bm, n, p) - risk_constant_part(bm, n)
                    assert lhs == pytest.approx(lpo_bias(bm, n, p), abs=1e-12)

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(35)
        for density in (UNIFORM, TILTED, FOUR_PIECE):
            for model in (make_histogram_model(4), make_trig_model(2)):
                bm = density_moments(density, model)
                for _ in range(5):
                    n = int(rng.integers(2, 50))
                    p = int(rng.integers(1, n))
                    assert lpo_bias(bm, n, p) >= 0.0


class TestOracle:
    def test_constant_basis(self):
        mean, var = exact_moments_oracle(make_histogram_model(1), UNIFORM, 4, 2)
        assert mean == pytest.approx(-1.0, abs=1e-14)
        assert var == pytest.approx(0.0, abs=1e-14)

    def test_reproduces_expectation_example(self):
        mean, _ = exact_moments_oracle(make_histogram_model(2), UNIFORM, 4, 2)
        assert mean == pytest.approx(-0.5, abs=1e-12)

    def test_variance_curve_matches_polynomial(self):
        model = make_histogram_model(2)
        for p in (1, 2, 3):
            _, var = exact_moments_oracle(model, UNIFORM, 4, p)
            poly = hist_variance_poly([0.5, 0.5], [0.5, 0.5], 4, p)
            assert var == pytest.approx(poly, abs=1e-10)

    def test_guards(self):
        with pytest.raises(ValueError):
            exact_moments_oracle(make_histogram_model(2), UNIFORM, 9, 1)
        with pytest.raises(ValueError):
            exact_moments_oracle(make_trig_model(1), UNIFORM, 4, 1)

    def test_oracle_against_direct_enumeration_of_samples(self):
        # same numbers out of an entirely different route: integrate the
        # closed-form risk over all bin-assignment outcomes by hand
        model = make_histogram_model(2)
        n, p = 4, 1
        total_mean = 0.0
        total_sq = 0.0
        for c0 in range(n + 1):
            weight = math.comb(n, c0) * 0.5 ** n
            sample = np.concatenate([np.full(c0, 0.25), np.full(n - c0, 0.75)])
            risk = lpo_risk_hist_fast(2, Sample(sample), p).value
            total_mean += weight * risk
            total_sq += weight * risk * risk
        mean, var = exact_moments_oracle(model, UNIFORM, n, p)
        assert mean == pytest.approx(total_mean, abs=1e-12)
        assert var == pytest.approx(total_sq - total_mean ** 2, abs=1e-12)


class TestMomentValidation:
    def test_inconsistent_moments_rejected(self):
        with pytest.raises(ValueError):
            BasisMoments(first=np.array([2.0]), second=np.array([1.0]),
                         third=np.array([1.0]), cross=np.array([[1.0]]),
                         triple=np.array([[1.0]]), phi_m_squared=1.0)
