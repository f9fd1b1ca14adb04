"""Exact moments of the leave-p-out risk estimator under a known density.

The variance is assembled from the nine bracketed terms of the closed-form
display, with the three alpha*beta cross terms entering negatively: that sign
is fixed by the exact enumeration oracle below (and by the histogram
q-polynomial corollary, which agrees with it).  For bases whose phi_m is
constant the two sign conventions coincide, so the distinction only matters
for piecewise polynomials here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bases import Model
from .lpo import _check_p

VARIANCE_CLAMP = 1e-12  # relative to the dominant term


@dataclass(frozen=True)
class BasisMoments:
    """Moments of the basis functions under a known density s.

    first/second/third are P phi_l, P phi_l^2, P phi_l^3; cross[i, j] is
    P(phi_i phi_j); triple[i, j] is P(phi_i^2 phi_j); phi_m_squared is
    E[(sum_l phi_l^2(X))^2].
    """

    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    cross: np.ndarray
    triple: np.ndarray
    phi_m_squared: float

    def __post_init__(self):
        # sanity margin sized for quadrature-derived moments
        slack = 1e-8 * np.maximum(1.0, np.abs(self.second))
        if np.any(self.second + slack < self.first ** 2):
            raise ValueError("inconsistent moments: P phi^2 < (P phi)^2")

    @property
    def dim(self) -> int:
        return self.first.size

    def var_sum(self) -> float:
        """sum_l Var phi_l(X)."""
        return float(math.fsum(q - m * m for m, q in zip(self.first, self.second)))

    def sm_norm_sq(self) -> float:
        """||s_m||^2 = sum_l (P phi_l)^2."""
        return float(math.fsum(m * m for m in self.first))

    def v_m(self) -> float:
        """V_m = E phi_m(X) = sum_l P phi_l^2."""
        return float(math.fsum(self.second))


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    bias: float
    n: int
    p: int


def lpo_expectation(moments: BasisMoments, n: int, p: int) -> float:
    """E R_p = (1/(n-p)) sum_l Var phi_l - sum_l (P phi_l)^2."""
    _check_p(n, p)
    return moments.var_sum() / (n - p) - moments.sm_norm_sq()


def lpo_variance(moments: BasisMoments, n: int, p: int) -> float:
    """Exact variance of the leave-p-out risk estimator.

    Nine terms over (n(n-1)(n-p))^2, with alpha = n-1, beta = n-p+1,
    t1 = n(n-1), t2 = t1(n-2), and the pattern-completing t3 = t2(n-3).
    """
    _check_p(n, p)
    al = float(n - 1)
    be = float(n - p + 1)
    t1 = float(n) * (n - 1)
    t2 = t1 * (n - 2)
    m1 = moments.first
    m2 = moments.second
    m3 = moments.third
    cross = moments.cross
    triple = moments.triple
    vm = moments.v_m()
    sm2 = moments.sm_norm_sq()
    off = ~np.eye(moments.dim, dtype=bool)
    # E (sum_l phi_l(X) P phi_l)^2 expands through the cross-moment matrix
    e_sm_sq = float(m1 @ cross @ m1)
    terms = (
        2.0 * be * be * t1 * float(np.dot(m2, m2)),
        -4.0 * al * be * t1 * float(np.dot(m3, m1)),
        n * al * al * moments.phi_m_squared,
        -n * al * al * vm * vm,
        2.0 * be * be * t1 * float((cross[off] ** 2).sum()),
        4.0 * be * be * t2 * e_sm_sq,
        (-4.0 * n + 6.0) * t1 * be * be * sm2 * sm2,
        -4.0 * al * be * t1 * float((triple * m1[None, :])[off].sum()),
        4.0 * t1 * al * be * vm * sm2,
    )
    scale = (float(n) * (n - 1) * (n - p)) ** 2
    value = math.fsum(terms) / scale
    dominant = max(abs(t) for t in terms) / scale
    if value < 0.0:
        if value < -VARIANCE_CLAMP * max(dominant, 1.0):
            raise ValueError(f"variance formula produced {value}, beyond cancellation noise")
        value = 0.0
    return value


def lpo_bias(moments: BasisMoments, n: int, p: int) -> float:
    """Bias of the leave-p-out risk: (p/(n(n-p))) sum_l Var phi_l >= 0."""
    _check_p(n, p)
    return p / (n * (n - p)) * moments.var_sum()


def risk_constant_part(moments: BasisMoments, n: int) -> float:
    """r_n(m) = (1/n) sum_l Var phi_l - sum_l (P phi_l)^2 (the estimand)."""
    return moments.var_sum() / n - moments.sm_norm_sq()


def moment_report(moments: BasisMoments, n: int, p: int) -> MomentReport:
    return MomentReport(lpo_expectation(moments, n, p), lpo_variance(moments, n, p),
                        lpo_bias(moments, n, p), n, p)


# ---------------------------------------------------------------------------
# histogram q-polynomial corollary
# ---------------------------------------------------------------------------

def hist_variance_poly(alphas, omegas, n: int, p: int) -> float:
    """Histogram variance via the quadratic-in-p polynomial form.

    alphas are the cell probabilities P(X in I_l), omegas the cell widths.
    Var = [p^2 q2 + p q1 + q0] / [n(n-1)(n-p)]^2 with s_{i,j} = sum alpha^i/omega^j.
    """
    _check_p(n, p)
    alphas = np.asarray(alphas, dtype=np.float64)
    omegas = np.asarray(omegas, dtype=np.float64)
    if alphas.shape != omegas.shape:
        raise ValueError("alphas and omegas must have matching shapes")
    if np.any(alphas < 0.0) or alphas.sum() > 1.0 + 1e-12:
        raise ValueError("alphas must be a subprobability vector")
    if np.any(omegas <= 0.0):
        raise ValueError("cell widths must be positive")

    def s(i, j):
        return float(np.sum(alphas ** i / omegas ** j))

    t1 = float(n) * (n - 1)
    q2 = t1 * (2.0 * s(2, 2) + 4.0 * s(3, 2) * (n - 2) + s(2, 1) ** 2 * (-4.0 * n + 6.0))
    q1 = t1 * (-8.0 * s(2, 2) - 8.0 * s(3, 2) * (n - 2) * (n + 1)
               - 4.0 * s(1, 1) * s(2, 1) * (n - 1)
               - 2.0 * s(2, 1) ** 2 * (-4.0 * n * n + 2.0 * n + 6.0))
    q0 = t1 * (s(1, 2) * (n - 1) - 2.0 * s(2, 2) * (n * n - 2.0 * n - 3.0)
               + 4.0 * s(3, 2) * (n - 2) * (n + 1) ** 2
               - s(1, 1) ** 2 * (n - 1)
               + 4.0 * s(1, 1) * s(2, 1) * (n * n - 1.0)
               + s(2, 1) ** 2 * (-4.0 * n + 6.0) * (n + 1) ** 2)
    value = (p * p * q2 + p * q1 + q0) / (float(n) * (n - 1) * (n - p)) ** 2
    return max(value, 0.0) if value > -1e-12 else value


# ---------------------------------------------------------------------------
# enumeration oracle
# ---------------------------------------------------------------------------

def _refined_pieces(model: Model, density):
    """Common refinement of the model cells and the density pieces.

    Returns (probabilities, basis value matrix of shape (dim, pieces)).
    """
    edges = model.cell_edges()
    if edges is None or not model.piecewise_constant():
        raise ValueError("the enumeration oracle needs a piecewise-constant basis")
    cuts = np.unique(np.concatenate([edges, np.asarray(density.breakpoints)]))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    widths = np.diff(cuts)
    probs = density.pdf(mids) * widths
    return cuts, probs, model.eval_all(mids)


def exact_moments_oracle(model: Model, density, n: int, p: int,
                         max_pieces: int = 8) -> tuple[float, float]:
    """Exact mean and variance of the risk by multinomial enumeration.

    The density must be piecewise constant and the basis constant on the
    refinement, so the risk is a function of the piece counts alone.
    Feasible only for small n; guarded accordingly.
    """
    _check_p(n, p)
    if n > 8:
        raise ValueError("enumeration oracle is limited to n <= 8")
    cuts, probs, vals = _refined_pieces(model, density)
    k = probs.size
    if k > max_pieces:
        raise ValueError(f"{k} refined pieces exceed the oracle limit {max_pieces}")
    ratio = (n - p + 1) / (n - 1)
    log_fact = [math.lgamma(i + 1) for i in range(n + 1)]
    mean_parts = []
    sq_parts = []
    for counts in itertools.product(range(n + 1), repeat=k):
        if sum(counts) != n:
            continue
        weight = math.exp(log_fact[n] - sum(log_fact[c] for c in counts))
        for c, pr in zip(counts, probs):
            weight *= pr ** c
        cvec = np.asarray(counts, dtype=np.float64)
        s_l = vals @ cvec
        q_l = (vals * vals) @ cvec
        risk = math.fsum(q - ratio * (s * s - q) for s, q in zip(s_l, q_l)) / (n * (n - p))
        mean_parts.append(weight * risk)
        sq_parts.append(weight * risk * risk)
    mean = math.fsum(mean_parts)
    variance = math.fsum(sq_parts) - mean * mean
    return mean, max(variance, 0.0)
