"""Self-contained verification suite behind the `verify` CLI verb."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bases import (make_haar_scaling_model, make_haar_wavelet_model,
                    make_histogram_model, make_piecewise_poly_model, make_trig_model)
from .estimator import Sample
from .lpo import lpo_risk_brute, lpo_risk_closed, lpo_risk_haar_fast, lpo_risk_hist_fast
from .moments import exact_moments_oracle, hist_variance_poly, lpo_expectation, lpo_variance
from .simulation import PiecewiseConstantDensity, density_moments, uniform_density


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_small_model(rng: np.random.Generator):
    kind = rng.integers(0, 5)
    if kind == 0:
        return make_histogram_model(int(rng.integers(1, 6)))
    if kind == 1:
        return make_trig_model(int(rng.integers(0, 3)))
    if kind == 2:
        return make_haar_scaling_model(int(rng.integers(0, 3)))
    if kind == 3:
        return make_haar_wavelet_model(int(rng.integers(0, 3)))
    return make_piecewise_poly_model(int(rng.integers(0, 2)), int(rng.integers(1, 4)))


def closed_vs_brute(cases: int, seed: int, n_max: int = 12,
                    split_cap: int = 10 ** 4, tol: float = 1e-10):
    """Relative agreement of the closed form with exhaustive enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    ran = 0
    while ran < cases:
        n = int(rng.integers(2, n_max + 1))
        p = int(rng.integers(1, n))
        if math.comb(n, p) > split_cap:
            continue
        model = random_small_model(rng)
        sample = Sample(rng.random(n))
        closed = lpo_risk_closed(model, sample, p).value
        brute = lpo_risk_brute(model, sample, p).value
        rel = abs(closed - brute) / max(1.0, abs(brute))
        worst = max(worst, rel)
        if rel > tol:
            return False, ran + 1, worst
        ran += 1
    return True, ran, worst


def fast_path_consistency(seed: int, n: int = 10 ** 5, tol: float = 1e-12):
    """Histogram/Haar corollary fast paths against the general closed form."""
    rng = np.random.default_rng(seed)
    sample = Sample(rng.random(n))
    worst = 0.0
    for D in (1, 2, 3, 7, 16, 64):
        for p in (1, n // 2, n - 1):
            a = lpo_risk_hist_fast(D, sample, p).value
            b = lpo_risk_closed(make_histogram_model(D), sample, p).value
            worst = max(worst, abs(a - b))
    for j in (0, 1, 3, 5):
        for p in (1, n // 2, n - 1):
            a = lpo_risk_haar_fast(j, sample, p).value
            b = lpo_risk_closed(make_haar_scaling_model(j), sample, p).value
            worst = max(worst, abs(a - b))
    return worst <= tol, worst


def moment_formulas_vs_oracle(tol: float = 1e-10):
    """Closed-form mean/variance against multinomial enumeration."""
    densities = [
        uniform_density(),
        PiecewiseConstantDensity((0.5, 1.5), (0.0, 0.5, 1.0)),
        PiecewiseConstantDensity((1.6, 0.4, 0.8, 1.2), (0.0, 0.25, 0.5, 0.75, 1.0)),
    ]
    worst = 0.0
    checked = 0
    for density in densities:
        for D in (1, 2, 3):
            model = make_histogram_model(D)
            bm = density_moments(density, model)
            for n in range(2, 7):
                for p in range(1, n):
                    mean, var = exact_moments_oracle(model, density, n, p)
                    dm = abs(mean - lpo_expectation(bm, n, p))
                    dv = abs(var - lpo_variance(bm, n, p))
                    qv = hist_variance_poly(np.diff(density.cdf(model.cell_edges())),
                                            np.diff(model.cell_edges()), n, p)
                    dq = abs(var - qv)
                    worst = max(worst, dm, dv, dq)
                    checked += 1
    return worst <= tol, checked, worst


def run_verification(cases: int = 120, seed: int = 0):
    results = []
    ok, ran, worst = closed_vs_brute(cases, seed)
    results.append(CheckResult("closed-form vs brute force",
                               ok, f"{ran} cases, worst rel diff {worst:.2e}"))
    ok, worst = fast_path_consistency(seed)
    results.append(CheckResult("corollary fast paths vs general form",
                               ok, f"worst abs diff {worst:.2e} at n=1e5"))
    ok, checked, worst = moment_formulas_vs_oracle()
    results.append(CheckResult("moment formulas vs enumeration oracle",
                               ok, f"{checked} configs, worst abs diff {worst:.2e}"))
    return results
