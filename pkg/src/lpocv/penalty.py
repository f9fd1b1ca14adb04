"""The leave-p-out risk as a penalized criterion with a random penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bases import Model
from .estimator import as_sample
from .lpo import _check_p, lpo_risk_from_stats, sufficient_stats
from .moments import BasisMoments


@dataclass(frozen=True)
class PenaltyDecomposition:
    """R_p = empirical risk + penalty, exact by construction.

    The risk field is assembled as empirical_risk + lpo_penalty, so the
    identity holds bit for bit; it agrees with the closed form to within one
    rounding of the final sum.
    """

    empirical_risk: float
    lpo_penalty: float
    lpo_risk: float
    n: int
    p: int


def lpo_penalty(model: Model, sample, p: int) -> PenaltyDecomposition:
    """Decompose the leave-p-out risk into empirical risk plus random penalty.

    Both pieces come from the same S_l sums.
    """
    sample = as_sample(sample)
    _check_p(sample.n, p)
    stats = sufficient_stats(model, sample)
    risk = lpo_risk_from_stats(model, stats, p).value
    empirical = -math.fsum((s / stats.n) ** 2 for s in stats.first)
    penalty = risk - empirical
    return PenaltyDecomposition(empirical, penalty, empirical + penalty, sample.n, p)


def expected_ideal_penalty(moments: BasisMoments, n: int) -> float:
    """E idpen = (2/n) sum_l Var phi_l(X)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 / n * moments.var_sum()


def expected_lpo_penalty(moments: BasisMoments, n: int, p: int) -> float:
    """E pen_p = ((2n-p)/(n(n-p))) sum_l Var phi_l(X)."""
    _check_p(n, p)
    return (2.0 * n - p) / (n * (n - p)) * moments.var_sum()


def overpen_factor(n: int, p: int) -> float:
    """C_over(p) = (2n-p)/(2n-2p): expected Lpo penalty over expected ideal one.

    Strictly increasing in p; 1 + 1/(2n-2) at p=1, 3/2 at p=n/2, unbounded
    as p approaches n.
    """
    _check_p(n, p)
    return (2.0 * n - p) / (2.0 * n - 2.0 * p)


def p_for_log_factor(n: int) -> tuple[int, float]:
    """Test-set size giving a log n overpenalization factor.

    The real-valued p* = (1 - 1/(2 log n - 1)) n satisfies
    C_over(p*) = log n exactly; returns p* rounded to the nearest integer
    (ties to even), clamped to [1, n-1], with C_over at the rounded value.
    """
    if n < 3:
        raise ValueError("needs n >= 3 so that log n > 1/2")
    p_star = (1.0 - 1.0 / (2.0 * math.log(n) - 1.0)) * n
    p_int = min(max(round(p_star), 1), n - 1)
    return p_int, overpen_factor(n, p_int)


def log_factor_target_p(n: int) -> float:
    """The un-rounded p* with C_over(p*) = log n; exposed for the identity test."""
    if n < 3:
        raise ValueError("needs n >= 3 so that log n > 1/2")
    return (1.0 - 1.0 / (2.0 * math.log(n) - 1.0)) * n
