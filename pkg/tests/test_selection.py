import math

import numpy as np
import pytest

from lpocv.bases import make_histogram_model, phi_m_sup
from lpocv.estimator import Sample
from lpocv.lpo import lpo_risk_closed
from lpocv.selection import (AD_UNKNOWN, AD_VERIFIED, admissible_p_range, auto_p,
                             build_collection, check_assumptions,
                             existence_inequality_holds, risk_curve, select_model,
                             solve_epsilon, zeta_of_epsilon)
from lpocv.simulation import PiecewiseConstantDensity, uniform_density


class TestBuildCollection:
    def test_pc_1000(self):
        c = build_collection("Pc", 1000)
        assert len(c) == 20
        assert [m.dim for m in c.models] == list(range(1, 21))

    def test_pp_1000(self):
        c = build_collection("Pp", 1000, degree_bound=1)
        assert [m.param("depth") for m in c.models] == [0, 1, 2, 3, 4]
        assert c.max_dim == 16

    def test_tp_1000(self):
        c = build_collection("Tp", 1000)
        assert [m.param("cutoff") for m in c.models] == list(range(10))
        assert c.max_dim == 19

    def test_n_too_small_rejected(self):
        with pytest.raises(ValueError):
            build_collection("Pc", 3, phi=0.05)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            build_collection("Exp", 100)

    def test_dimensions_strictly_increase(self):
        for kind in ("Pc", "Pp", "Tp"):
            dims = [m.dim for m in build_collection(kind, 500).models]
            assert all(b > a for a, b in zip(dims, dims[1:]))


class TestAssumptions:
    def test_pc_1000_all_hold(self):
        report = check_assumptions(build_collection("Pc", 1000), 1000)
        assert report.reg_ok and report.reg2_ok and report.reg3_ok and report.pol_ok
        assert report.pol_delta == 0
        assert report.phi_reg3 == pytest.approx(1.0)

    def test_forced_dimension_breaks_reg(self):
        n = 1000
        collection = build_collection("Pc", n, max_dim=n)
        report = check_assumptions(collection, n)
        assert not report.reg_ok

    def test_tp_reg3_with_phi_one(self):
        collection = build_collection("Tp", 1000)
        report = check_assumptions(collection, 1000)
        assert report.reg3_ok
        assert report.phi_reg3 == pytest.approx(1.0)  # sup phi_m = D_m exactly

    def test_reg_implies_reg2_for_partition_collections(self):
        for kind in ("Pc", "Pp"):
            for n in (100, 1000, 20000):
                report = check_assumptions(build_collection(kind, n), n)
                assert (not report.reg_ok) or report.reg2_ok

    def test_ad_status(self):
        collection = build_collection("Pc", 200)
        assert check_assumptions(collection, 200).ad_status == AD_UNKNOWN
        assert check_assumptions(collection, 200, uniform_density()).ad_status \
            == AD_VERIFIED
        vanishing = PiecewiseConstantDensity((2.0, 0.0), (0.0, 0.5, 1.0))
        assert check_assumptions(collection, 200, vanishing).ad_status == AD_UNKNOWN


class TestSolveEpsilon:
    def test_small_n_empty(self):
        assert solve_epsilon(10) is None
        assert solve_epsilon(28) is None

    def test_n_29_is_empty_the_inequality_is_infeasible(self):
        # the published lemma states n >= 29, but a direct scan of the
        # inequality over the whole zeta range shows it first becomes
        # feasible at n = 30; see the decisions ledger
        assert solve_epsilon(29) is None
        zs = np.linspace(2 / 28 + 1e-9, 1 - 1e-9, 200001)
        lhs = 4 * zs / (1 + 3 * zs) + 2 / 29
        rhs = 1 - 2 / (zs * 28 - 2)
        assert (lhs >= rhs).all()

    def test_nonempty_from_30(self):
        for n in (30, 31, 50, 100, 1024, 10 ** 5):
            eps = solve_epsilon(n)
            assert eps is not None and 0.0 < eps < 1.0

    def test_returned_epsilon_satisfies_inequality(self):
        for n in list(range(30, 200)) + [999, 5000, 10 ** 5]:
            eps = solve_epsilon(n)
            assert existence_inequality_holds(n, eps)

    def test_sweep_nonempty_30_to_1e5(self):
        ns = np.arange(30, 10 ** 5 + 1, dtype=np.float64)
        a = ns + 6
        b = -(ns * ns - 11 * ns - 10)
        c = 2 * ns * (ns + 5)
        disc = b * b - 4 * a * c
        assert (disc > 0).all()
        zeta = (-b / (2 * a) + 2.0) / (ns - 1)
        assert ((zeta > 0) & (zeta < 1 - 2.0 ** -8)).all()


class TestAdmissiblePRange:
    def test_nonempty_for_moderate_n(self):
        for n in (31, 50, 100, 1024, 10 ** 4):
            rng = admissible_p_range(n, solve_epsilon(n), 0.01, 0.01)
            assert not rng.empty
            assert 1 <= rng.p_lo <= rng.p_hi <= n - 1

    def test_n_30_integer_range_is_empty_at_midpoint_delta(self):
        # the real (Ran) interval is nonempty but shorter than 1/n here,
        # so it contains no integer; emptiness is reported, not raised
        rng = admissible_p_range(30, solve_epsilon(30), 0.01, 0.01)
        assert rng.empty

    def test_large_margins_can_empty_the_range(self):
        rng = admissible_p_range(100, solve_epsilon(100), 0.49, 0.49)
        assert rng.empty

    def test_bounds_ordering_before_margins(self):
        for n in (30, 64, 512):
            z = zeta_of_epsilon(solve_epsilon(n))
            lower = 4 * z / (1 + 3 * z) + (2 / n) * (1 + z) / (1 + 3 * z)
            upper = 1 - 2 / (z * (n - 1) - 2)
            assert lower < upper

    def test_degenerate_zeta_rejected(self):
        with pytest.raises(ValueError):
            admissible_p_range(5, 0.01, 0.1, 0.1)

    def test_bad_margins_rejected(self):
        with pytest.raises(ValueError):
            admissible_p_range(100, solve_epsilon(100), 0.0, 0.1)

    def test_auto_p_midpoint(self):
        n = 256
        rng = admissible_p_range(n, solve_epsilon(n), 0.01, 0.01)
        assert auto_p(n) == (rng.p_lo + rng.p_hi) // 2
        with pytest.raises(ValueError):
            auto_p(29)


class TestSelection:
    def test_singleton_collection(self, three_points):
        model = make_histogram_model(3)
        result = select_model([model], three_points, 1)
        assert result.chosen is model

    def test_two_model_worked_example(self, three_points):
        models = [make_histogram_model(1), make_histogram_model(2)]
        result = select_model(models, three_points, 2)
        np.testing.assert_allclose(result.risks, [-1.0, 2 / 3], atol=1e-12)
        assert result.chosen.dim == 1

    def test_duplicate_model_keeps_chosen_risk(self, three_points):
        models = [make_histogram_model(1), make_histogram_model(2)]
        base = select_model(models, three_points, 2)
        dup = select_model(models + [make_histogram_model(1)], three_points, 2)
        assert dup.chosen_risk == base.chosen_risk
        assert dup.chosen.dim == 1
        assert len(dup.tied_indices) == 2

    def test_permutation_invariance(self):
        rng = np.random.default_rng(51)
        values = rng.random(120)
        shuffled = values.copy()
        rng.shuffle(shuffled)
        collection = build_collection("Pc", 120)
        a = select_model(collection, Sample(values), 60)
        b = select_model(collection, Sample(shuffled), 60)
        assert a.chosen == b.chosen
        np.testing.assert_allclose(a.risks, b.risks, atol=1e-12)

    def test_invalid_p_and_empty_collection(self, three_points):
        with pytest.raises(ValueError):
            select_model([make_histogram_model(1)], three_points, 3)
        with pytest.raises(ValueError):
            select_model([], three_points, 1)


class TestRiskCurve:
    def test_constant_only_collection(self, three_points):
        curve = risk_curve([make_histogram_model(1)] * 1, three_points, 1)
        assert curve == [pytest.approx(-1.0, abs=1e-12)]

    def test_fast_curves_match_per_model_closed_form(self):
        rng = np.random.default_rng(52)
        sample = Sample(rng.random(400))
        for kind in ("Pc", "Tp"):
            collection = build_collection(kind, 400)
            curve = risk_curve(collection, sample, 200)
            for model, value in zip(collection.models, curve):
                direct = lpo_risk_closed(model, sample, 200).value
                assert value == pytest.approx(direct, abs=1e-12)

    def test_threaded_curve_identical_to_serial(self):
        rng = np.random.default_rng(53)
        sample = Sample(rng.random(90))
        collection = build_collection("Pp", 90, degree_bound=2)
        serial = risk_curve(collection, sample, 45)
        threaded = risk_curve(collection, sample, 45, threads=4)
        assert serial == threaded

    def test_pc_curve_on_uniform_fixture(self):
        sample = Sample(np.random.default_rng(54).random(1000))
        curve = risk_curve(build_collection("Pc", 1000), sample, 500)
        assert len(curve) == 20
        assert all(math.isfinite(v) for v in curve)


class TestBudgetArithmetic:
    def test_largest_reg_histogram_is_20_at_n_1000(self):
        budget = 1.0 * 1000 / math.log(1000) ** 2
        assert math.floor(budget) == 20
        assert phi_m_sup(make_histogram_model(20)) <= budget
