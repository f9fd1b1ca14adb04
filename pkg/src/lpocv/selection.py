"""Model collections, assumption checkers, admissible test-set sizes, and
risk-minimizing model selection."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bases import (HISTOGRAM, TRIGONOMETRIC, Model, make_histogram_model,
                    make_piecewise_poly_model, make_trig_model, phi_m_sup,
                    sup_linear_combination_sq)
from .estimator import as_sample
from .lpo import _check_p, lpo_risk_closed

PC = "Pc"
PP = "Pp"
TP = "Tp"
KINDS = (PC, PP, TP)

AD_VERIFIED = "verified-sufficient-condition"
AD_UNKNOWN = "unknown"


@dataclass(frozen=True)
class Collection:
    """An ordered collection of nested models with strictly increasing dims."""

    kind: str
    models: tuple[Model, ...]
    max_dim: int
    phi: float
    degree_bound: int = 1

    def __post_init__(self):
        dims = [m.dim for m in self.models]
        if any(b <= a for a, b in zip(dims, dims[1:])):
            raise ValueError("model dimensions must be strictly increasing")

    def __len__(self) -> int:
        return len(self.models)


def dimension_budget(n: int, phi: float) -> float:
    """The regularity budget phi * n / (log n)^2 (natural logarithm)."""
    return phi * n / math.log(n) ** 2


def build_collection(kind: str, n: int, phi: float = 1.0, degree_bound: int = 1,
                     max_dim: int | None = None) -> Collection:
    """Build one of the (Pc), (Pp), (Tp) collections for sample size n.

    Dimensions are capped at phi*n/(log n)^2 unless max_dim overrides the cap
    (useful to probe assumption failures).
    """
    if n < 2:
        raise ValueError("collections need n >= 2")
    if phi <= 0.0:
        raise ValueError("phi must be positive")
    budget = max_dim if max_dim is not None else int(dimension_budget(n, phi))
    if budget < 1:
        raise ValueError(f"dimension budget {budget} < 1: n={n} too small for phi={phi}")
    if kind == PC:
        models = tuple(make_histogram_model(D) for D in range(1, budget + 1))
    elif kind == PP:
        r = degree_bound
        if r < 1:
            raise ValueError("degree bound must be >= 1")
        if r > budget:
            raise ValueError(f"smallest dimension {r} already exceeds the budget {budget}")
        depths = range(0, int(math.log2(budget / r)) + 1)
        models = tuple(make_piecewise_poly_model(m, r) for m in depths)
    elif kind == TP:
        j_max = (budget - 1) // 2
        models = tuple(make_trig_model(K) for K in range(0, j_max + 1))
    else:
        raise ValueError(f"unknown collection kind {kind!r}; use one of {KINDS}")
    return Collection(kind, models, models[-1].dim, phi, degree_bound)


# ---------------------------------------------------------------------------
# assumption checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    """Decisions and witnessing constants for the regularity assumptions.

    All booleans come from analytic sup-norm bounds, never from sampling.
    """

    reg_ok: bool
    reg2_ok: bool
    reg3_ok: bool
    pol_ok: bool
    phi_reg: float
    phi_reg2: float
    phi_reg3: float
    pol_delta: int
    ad_status: str

    def describe(self) -> dict:
        return {
            "reg_ok": self.reg_ok, "reg2_ok": self.reg2_ok, "reg3_ok": self.reg3_ok,
            "pol_ok": self.pol_ok, "phi_reg": self.phi_reg, "phi_reg2": self.phi_reg2,
            "phi_reg3": self.phi_reg3, "pol_delta": self.pol_delta,
            "ad_status": self.ad_status,
        }


def check_assumptions(collection: Collection, n: int, density=None) -> AssumptionReport:
    """Check (Reg), (Reg2), (Reg3), (Pol) analytically; (Ad) needs a known density.

    (Ad) is certified only through the sufficient condition s >= rho > 0 on
    [0,1], available in simulation mode; from data alone it stays unknown.
    """
    budget = dimension_budget(n, collection.phi)
    sups = [phi_m_sup(m) for m in collection.models]
    sup_max = max(sups)
    reg_ok = sup_max <= budget
    comb_sq = max(sup_linear_combination_sq(m) for m in collection.models)
    reg2_ok = comb_sq <= budget
    phi_reg3 = max(s / m.dim for s, m in zip(sups, collection.models))
    dims = [m.dim for m in collection.models]
    pol_ok = len(set(dims)) == len(dims)  # at most one model per dimension
    ad_status = AD_UNKNOWN
    if density is not None and density.min_density() > 0.0:
        ad_status = AD_VERIFIED
    return AssumptionReport(
        reg_ok=reg_ok, reg2_ok=reg2_ok, reg3_ok=True, pol_ok=pol_ok,
        phi_reg=sup_max * math.log(n) ** 2 / n,
        phi_reg2=comb_sq * math.log(n) ** 2 / n,
        phi_reg3=phi_reg3, pol_delta=0, ad_status=ad_status)


# ---------------------------------------------------------------------------
# admissible p range
# ---------------------------------------------------------------------------

def zeta_of_epsilon(eps: float) -> float:
    return 1.0 - (1.0 + eps) ** (-8)


def epsilon_of_zeta(zeta: float) -> float:
    return (1.0 - zeta) ** (-0.125) - 1.0


def existence_inequality_holds(n: int, eps: float) -> bool:
    """The epsilon-existence inequality, evaluated directly."""
    z = zeta_of_epsilon(eps)
    if z * (n - 1) <= 2.0:
        return False
    return 4.0 * z / (1.0 + 3.0 * z) + 2.0 / n < 1.0 - 2.0 / (z * (n - 1) - 2.0) < 1.0


def _existence_quadratic_roots(n: int) -> tuple[float, float] | None:
    # In q = delta (n-1) the existence inequality is exactly equivalent to
    #   q^2 (n+6) - q (n^2 - 11n - 10) + 2n(n+5) < 0.
    # (The published proof prints -(n-10)(n-1) for the linear coefficient; the
    # direct expansion gives -(n^2-11n-10) and only the latter passes the
    # substitution check, so that is what ships.)
    a = float(n + 6)
    b = -float(n * n - 11 * n - 10)
    c = 2.0 * n * (n + 5)
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return None
    s = math.sqrt(disc)
    return (-b - s) / (2.0 * a), (-b + s) / (2.0 * a)


def solve_epsilon(n: int) -> float | None:
    """Smallest-margin-maximizing epsilon for the oracle theorems, or None.

    Solves the delta-quadratic from the existence lemma, takes delta at the
    midpoint of the root interval, and maps back through
    zeta = delta + 2/(n-1), eps = (1-zeta)^(-1/8) - 1.  Returns None when the
    discriminant is nonpositive or no feasible zeta exists (n <= 29).
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    roots = _existence_quadratic_roots(n)
    if roots is None:
        return None
    q_mid = 0.5 * (roots[0] + roots[1])
    zeta = (q_mid + 2.0) / (n - 1)
    if not 0.0 < zeta < 1.0 - 2.0 ** (-8):  # eps must stay in (0,1)
        return None
    eps = epsilon_of_zeta(zeta)
    if not existence_inequality_holds(n, eps):
        return None
    return eps


@dataclass(frozen=True)
class PRange:
    """Admissible integer test-set sizes under (Ran), possibly empty."""

    epsilon: float
    zeta: float
    p_lo: int
    p_hi: int
    alpha: float
    beta: float

    @property
    def empty(self) -> bool:
        return self.p_lo > self.p_hi

    def midpoint(self) -> int:
        if self.empty:
            raise ValueError("admissible range is empty")
        return (self.p_lo + self.p_hi) // 2

    def describe(self) -> dict:
        return {"epsilon": self.epsilon, "zeta": self.zeta, "p_lo": self.p_lo,
                "p_hi": self.p_hi, "alpha": self.alpha, "beta": self.beta,
                "empty": self.empty}


def admissible_p_range(n: int, eps: float, alpha: float, beta: float) -> PRange:
    """Integer p range allowed by (Ran) with safety margins alpha, beta.

    Emptiness is a legal outcome (reported, not raised); only the degenerate
    zeta(n-1) <= 2 configuration is an error.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0,1)")
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("margins alpha, beta must be in (0,1)")
    z = zeta_of_epsilon(eps)
    if z * (n - 1) <= 2.0:
        raise ValueError(f"zeta(eps)(n-1) = {z * (n - 1):.3f} <= 2: range undefined")
    lower = 4.0 * z / (1.0 + 3.0 * z) + (2.0 / n) * (1.0 + z) / (1.0 + 3.0 * z) + alpha
    upper = 1.0 - 2.0 / (z * (n - 1) - 2.0) - beta
    p_lo = max(math.ceil(n * lower), 1)
    p_hi = min(math.floor(n * upper), n - 1)
    return PRange(eps, z, p_lo, p_hi, alpha, beta)


def auto_p(n: int, alpha: float = 0.01, beta: float = 0.01) -> int:
    """Theorem-guided default p: midpoint of the admissible range."""
    eps = solve_epsilon(n)
    if eps is None:
        raise ValueError(f"no admissible epsilon exists for n={n}")
    rng = admissible_p_range(n, eps, alpha, beta)
    if rng.empty:
        raise ValueError(f"admissible p range is empty for n={n} "
                         f"(alpha={alpha}, beta={beta})")
    return rng.midpoint()


# ---------------------------------------------------------------------------
# risk curves and selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionResult:
    chosen_index: int
    chosen: Model
    risks: tuple[float, ...]
    tied_indices: tuple[int, ...] = field(default=())

    @property
    def chosen_risk(self) -> float:
        return self.risks[self.chosen_index]

    def describe(self) -> dict:
        return {"chosen": self.chosen.describe(), "chosen_index": self.chosen_index,
                "chosen_risk": self.chosen_risk, "risks": list(self.risks),
                "tied_indices": list(self.tied_indices)}


def _curve_histograms(dims, values: np.ndarray, p: int) -> list[float]:
    n = values.size
    out = []
    for D in dims:
        frac = np.bincount(np.minimum((values * D).astype(np.int64), D - 1),
                           minlength=D) / n
        out.append(D / ((n - 1) * (n - p))
                   * ((2 * n - p) - n * (n - p + 1) * float(frac @ frac)))
    return out


def _curve_trig(cutoffs, values: np.ndarray, p: int) -> list[float]:
    n = values.size
    k_max = max(cutoffs)
    ratio = (n - p + 1) / (n - 1)
    const = (n - ratio * (n * n - n)) / (n * (n - p))
    if k_max == 0:
        return [const for _ in cutoffs]
    ks = np.arange(1, k_max + 1)
    ang = 2.0 * np.pi * values[:, None] * ks
    s_sin = math.sqrt(2.0) * np.sin(ang).sum(axis=0)
    s_cos = math.sqrt(2.0) * np.cos(ang).sum(axis=0)
    c2 = np.cos(2.0 * ang).sum(axis=0)  # sum_j cos(4 pi k X_j)
    q_sin = n - c2
    q_cos = n + c2
    pair = (q_sin - ratio * (s_sin ** 2 - q_sin)
            + q_cos - ratio * (s_cos ** 2 - q_cos)) / (n * (n - p))
    cum = np.concatenate(([0.0], np.cumsum(pair)))
    return [const + float(cum[K]) for K in cutoffs]


def _as_models(collection) -> tuple[Model, ...]:
    models = collection.models if isinstance(collection, Collection) else tuple(collection)
    if not models:
        raise ValueError("empty collection")
    return models


def risk_curve(collection, sample, p: int, threads: int | None = None) -> list[float]:
    """Leave-p-out risks for every model, in collection order.

    Accepts a Collection or any sequence of models.  Histogram and
    trigonometric collections use vectorized sufficient statistics; results
    match the per-model closed form to within roundoff.
    """
    models = _as_models(collection)
    sample = as_sample(sample)
    _check_p(sample.n, p)
    if all(m.family == HISTOGRAM for m in models):
        return _curve_histograms([m.dim for m in models], sample.values, p)
    if all(m.family == TRIGONOMETRIC for m in models):
        return _curve_trig([m.param("cutoff") for m in models], sample.values, p)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return [r.value for r in pool.map(
                lambda m: lpo_risk_closed(m, sample, p), models)]
    return [lpo_risk_closed(m, sample, p).value for m in models]


def select_model(collection, sample, p: int,
                 threads: int | None = None) -> SelectionResult:
    """argmin of the leave-p-out risk over the collection.

    Ties break to the smallest dimension, then to collection order.
    """
    models = _as_models(collection)
    risks = risk_curve(models, sample, p, threads=threads)
    best = min(risks)
    tied = tuple(i for i, r in enumerate(risks) if r == best)
    idx = min(tied, key=lambda i: (models[i].dim, i))
    return SelectionResult(idx, models[idx], tuple(risks), tied)
