"""Known densities on [0,1], exact risks, and Monte Carlo experiments.

Replications draw from independent child generators keyed by (seed, rep), so
serial and parallel runs aggregate identically and everything is reproducible
bit for bit from the configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bases import TRIGONOMETRIC, Model, make_trig_model
from .estimator import Sample, fit_projection
from .moments import BasisMoments
from .quadrature import piecewise_midpoint_nodes
from .selection import auto_p, build_collection, select_model

BISECTION_STEPS = 50  # inverse-CDF bisection to ~1e-15, past the 1e-12 contract


# ---------------------------------------------------------------------------
# density specifications
# ---------------------------------------------------------------------------

class _Density:
    """Common density interface: pdf, cdf, sampling, analytic summaries."""

    breakpoints: tuple[float, ...] = (0.0, 1.0)

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def l2_norm_sq(self) -> float:
        raise NotImplementedError

    def min_density(self) -> float:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling by bisection on the monotone CDF."""
        u = rng.random(n)
        lo = np.zeros(n)
        hi = np.ones(n)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PiecewiseConstantDensity(_Density):
    """Piecewise-constant density with given heights between breakpoints."""

    heights: tuple[float, ...]
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        h = tuple(float(v) for v in self.heights)
        if len(bp) != len(h) + 1 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1 with one height per piece")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(v < 0.0 for v in h):
            raise ValueError("heights must be nonnegative")
        total = sum(v * (b - a) for v, a, b in zip(h, bp, bp[1:]))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"density integrates to {total}, not 1")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "breakpoints", bp)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1,
                      0, len(self.heights) - 1)
        return np.asarray(self.heights)[idx]

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        bp = np.asarray(self.breakpoints)
        h = np.asarray(self.heights)
        cum = np.concatenate(([0.0], np.cumsum(h * np.diff(bp))))
        idx = np.clip(np.searchsorted(bp, x, side="right") - 1, 0, h.size - 1)
        return cum[idx] + h[idx] * (x - bp[idx])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # closed-form inverse: locate the piece, invert the linear segment
        u = rng.random(n)
        bp = np.asarray(self.breakpoints)
        h = np.asarray(self.heights)
        w = np.diff(bp)
        cum = np.concatenate(([0.0], np.cumsum(h * w)))
        cum[-1] = 1.0
        idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, h.size - 1)
        # zero-height pieces never receive u strictly inside their span
        frac = np.where(h[idx] > 0, (u - cum[idx]) / np.where(h[idx] > 0, h[idx], 1.0), 0.0)
        return np.minimum(bp[idx] + frac, 1.0)

    def l2_norm_sq(self) -> float:
        return float(sum(v * v * (b - a) for v, a, b in
                         zip(self.heights, self.breakpoints, self.breakpoints[1:])))

    def min_density(self) -> float:
        return min(self.heights)


def uniform_density() -> PiecewiseConstantDensity:
    return PiecewiseConstantDensity((1.0,), (0.0, 1.0))


@dataclass(frozen=True)
class HolderCuspDensity(_Density):
    """s(x) = c (1 + L |x - 1/2|^alpha), normalized; Holder-alpha by construction.

    Membership: |s(x)-s(y)| <= c L |x-y|^alpha, so s lies in H(cL, alpha).
    """

    L: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0,1]")
        if self.L <= 0.0:
            raise ValueError("L must be positive")

    @property
    def scale(self) -> float:
        # 1 / (1 + L * int |x-1/2|^alpha)
        return 1.0 / (1.0 + self.L * 2.0 ** (-self.alpha) / (self.alpha + 1.0))

    @property
    def holder_constant(self) -> float:
        return self.scale * self.L

    breakpoints = (0.0, 0.5, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.scale * (1.0 + self.L * np.abs(x - 0.5) ** self.alpha)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        a1 = self.alpha + 1.0
        half = 0.5 ** a1
        lower = (half - np.clip(0.5 - x, 0.0, None) ** a1) / a1
        upper = (half + np.clip(x - 0.5, 0.0, None) ** a1) / a1
        return self.scale * (x + self.L * np.where(x < 0.5, lower, upper))

    def l2_norm_sq(self) -> float:
        a = self.alpha
        inner = 1.0 + 2.0 * self.L * 2.0 ** (-a) / (a + 1.0) \
            + self.L ** 2 * 2.0 ** (-2.0 * a) / (2.0 * a + 1.0)
        return self.scale ** 2 * inner

    def min_density(self) -> float:
        return self.scale


@dataclass(frozen=True)
class TrigSmoothDensity(_Density):
    """s = 1 + sum_l coeffs[l] phi_l in the trigonometric basis (l >= 1)."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if self.min_density() < 0.0:
            raise ValueError("coefficient sequence produces a negative density")

    def _model(self) -> Model:
        return make_trig_model((len(self.coeffs) + 1) // 2)

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        model = self._model()
        out = np.ones_like(x)
        for pos, c in enumerate(self.coeffs, start=1):
            if c:
                out += c * model.eval_row(pos, x)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = x.astype(np.float64).copy()
        for pos, c in enumerate(self.coeffs, start=1):
            if not c:
                continue
            k = (pos + 1) // 2
            w = 2.0 * np.pi * k
            if pos % 2 == 1:  # sin component integrates to (1-cos)/w
                out += c * math.sqrt(2.0) * (1.0 - np.cos(w * x)) / w
            else:
                out += c * math.sqrt(2.0) * np.sin(w * x) / w
        return out

    def l2_norm_sq(self) -> float:
        return 1.0 + float(sum(c * c for c in self.coeffs))

    def min_density(self) -> float:
        xs = np.linspace(0.0, 1.0, 20001)
        return float(self.pdf(xs).min())


DENSITY_KINDS = {
    "uniform": lambda params: uniform_density(),
    "piecewise-constant": lambda params: PiecewiseConstantDensity(
        tuple(params["heights"]), tuple(params["breakpoints"])),
    "holder-cusp": lambda params: HolderCuspDensity(params["L"], params["alpha"]),
    "trig-smooth": lambda params: TrigSmoothDensity(tuple(params["coeffs"])),
}


def density_from_descriptor(desc: dict) -> _Density:
    try:
        kind = desc["kind"]
    except (KeyError, TypeError):
        raise ValueError("density descriptor must be {'kind': ..., ...params}")
    if kind not in DENSITY_KINDS:
        raise ValueError(f"unknown density kind {kind!r}")
    return DENSITY_KINDS[kind](desc)


def sample_density(spec: _Density, n: int, seed) -> Sample:
    """Deterministic sample of size n from the density, keyed by seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    return Sample(spec.sample(n, np.random.default_rng(seed)))


# ---------------------------------------------------------------------------
# moments of basis functions under a known density
# ---------------------------------------------------------------------------

def _moment_nodes(spec: _Density, model: Model):
    cuts = list(spec.breakpoints)
    edges = model.cell_edges()
    if edges is not None:
        cuts.extend(edges.tolist())
    return piecewise_midpoint_nodes(cuts)


def density_moments(spec: _Density, model: Model) -> BasisMoments:
    """All basis moments needed by the closed-form mean/variance.

    Piecewise-constant bases take their cell masses straight from the CDF
    (exact for every density here); everything else goes through the
    breakpoint-aligned reference quadrature.
    """
    if model.piecewise_constant():
        cuts = np.unique(np.concatenate([model.cell_edges(),
                                         np.asarray(spec.breakpoints)]))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        probs = np.diff(spec.cdf(cuts))
        vals = model.eval_all(mids)
    else:
        x, w = _moment_nodes(spec, model)
        probs = spec.pdf(x) * w
        vals = model.eval_all(x)
    sq = vals * vals
    first = vals @ probs
    second = sq @ probs
    third = (sq * vals) @ probs
    cross = (vals * probs) @ vals.T
    triple = (sq * probs) @ vals.T
    phi_m = sq.sum(axis=0)
    return BasisMoments(first=first, second=second, third=third, cross=cross,
                        triple=triple, phi_m_squared=float(phi_m @ (phi_m * probs)))


def basis_means(spec: _Density, model: Model) -> np.ndarray:
    """P phi_l for every basis function, using exact CDF mass for partitions."""
    if model.piecewise_constant():
        edges = model.cell_edges()
        mass = np.diff(spec.cdf(edges))
        mids = 0.5 * (edges[:-1] + edges[1:])
        return (model.eval_all(mids) * mass).sum(axis=1)
    if model.family == TRIGONOMETRIC and isinstance(spec, TrigSmoothDensity):
        out = np.zeros(model.dim)
        out[0] = 1.0
        take = min(model.dim - 1, len(spec.coeffs))
        out[1:1 + take] = spec.coeffs[:take]
        return out
    x, w = _moment_nodes(spec, model)
    return model.eval_all(x) @ (spec.pdf(x) * w)


def true_risk(spec: _Density, model: Model, n: int) -> float:
    """E ||s - shat_m||^2 = ||s - s_m||^2 + (V_m - ||s_m||^2)/n.

    The bias uses ||s||^2 - ||s_m||^2 (s_m is the orthogonal projection);
    the variance part is exact from the basis moments.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    moments = density_moments(spec, model)
    bias = max(spec.l2_norm_sq() - moments.sm_norm_sq(), 0.0)
    return bias + (moments.v_m() - moments.sm_norm_sq()) / n


def projection_bias(spec: _Density, model: Model) -> float:
    """||s - s_m||^2, the squared approximation error of the model."""
    moments = density_moments(spec, model)
    return max(spec.l2_norm_sq() - moments.sm_norm_sq(), 0.0)


def holder_bias_constant(alpha: float) -> float:
    """C_alpha = 4(alpha+2) / ((1+alpha)^2 (2 alpha+3)): histogram bias bound
    ||s-s_m||^2 <= C_alpha L^2 D^(-2 alpha) over the Holder class."""
    return 4.0 * (alpha + 2.0) / ((1.0 + alpha) ** 2 * (2.0 * alpha + 3.0))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible experiment description.

    p_rule is 'half' (p = n//2), 'loo' (p = 1), 'ran-mid' (midpoint of the
    admissible range), or an explicit integer.
    """

    density: _Density
    collection_kind: str
    n_grid: tuple[int, ...]
    p_rule: object = "half"
    replications: int = 200
    seed: int = 0
    phi: float = 1.0
    degree_bound: int = 1

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])) or not grid:
            raise ValueError("n grid must be nonempty and strictly increasing")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        object.__setattr__(self, "n_grid", grid)


def resolve_p(rule, n: int) -> int:
    if rule == "half":
        return max(n // 2, 1)
    if rule == "loo":
        return 1
    if rule == "ran-mid":
        return auto_p(n)
    p = int(rule)
    if not 1 <= p <= n - 1:
        raise ValueError(f"explicit p={p} outside 1..{n - 1}")
    return p


def _fitted_loss(spec, model, sample_values, means_cache) -> float:
    """||s - shat_m||^2 for a fitted model, via the orthonormal expansion."""
    key = (model.family, model.params)
    if key not in means_cache:
        means_cache[key] = basis_means(spec, model)
    m1 = means_cache[key]
    est = fit_projection(model, Sample(sample_values))
    a = est.coeffs
    return float(spec.l2_norm_sq() - 2.0 * float(a @ m1) + float(a @ a))


def _replication_losses(config: ExperimentConfig, n: int):
    collection = build_collection(config.collection_kind, n, config.phi,
                                  config.degree_bound)
    p = resolve_p(config.p_rule, n)
    losses = np.empty(config.replications)
    chosen_dims = np.empty(config.replications, dtype=np.int64)
    means_cache: dict = {}
    for rep in range(config.replications):
        rng = np.random.default_rng([config.seed, rep, n])
        values = config.density.sample(n, rng)
        result = select_model(collection, Sample(values), p)
        losses[rep] = _fitted_loss(config.density, result.chosen, values, means_cache)
        chosen_dims[rep] = result.chosen.dim
    oracle = min(true_risk(config.density, m, n) for m in collection.models)
    return losses, oracle, chosen_dims


def oracle_ratio_experiment(config: ExperimentConfig) -> dict:
    """Mean selected-model loss against the best true risk in the collection.

    When the exact oracle risk is zero (a model represents s exactly) the
    ratio is reported against the 1/n remainder scale of the oracle
    inequalities instead, and flagged as degenerate.
    """
    rows = []
    for n in config.n_grid:
        losses, oracle, dims = _replication_losses(config, n)
        mean = float(losses.mean())
        se = float(losses.std(ddof=1) / math.sqrt(losses.size)) if losses.size > 1 else 0.0
        degenerate = oracle <= 0.0
        denom = oracle if not degenerate else 1.0 / n
        rows.append({
            "n": n, "p": resolve_p(config.p_rule, n),
            "mean_loss": mean, "se_loss": se,
            "oracle_risk": oracle, "degenerate_oracle": degenerate,
            "denominator": denom, "ratio": mean / denom,
            "ratio_ci_halfwidth": 1.96 * se / denom,
            "mean_chosen_dim": float(dims.mean()),
        })
    return {"experiment": "oracle-ratio", "p_rule": str(config.p_rule),
            "collection": config.collection_kind, "replications": config.replications,
            "seed": config.seed, "rows": rows,
            "max_ratio": max(r["ratio"] for r in rows)}


def adaptivity_slope_experiment(config: ExperimentConfig) -> dict:
    """Least-squares slope of log mean risk against log n."""
    grid = config.n_grid
    if len(grid) < 2 or grid[-1] < 10 * grid[0]:
        raise ValueError("n grid must span at least one decade")
    rows = []
    for n in grid:
        losses, oracle, dims = _replication_losses(config, n)
        rows.append({"n": n, "p": resolve_p(config.p_rule, n),
                     "mean_loss": float(losses.mean()),
                     "se_loss": float(losses.std(ddof=1) / math.sqrt(losses.size)),
                     "oracle_risk": oracle,
                     "mean_chosen_dim": float(dims.mean())})
    lx = np.log([r["n"] for r in rows])
    ly = np.log([r["mean_loss"] for r in rows])
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, residuals, *_ = np.linalg.lstsq(design, ly, rcond=None)
    dof = max(len(rows) - 2, 1)
    resid_var = float(residuals[0]) / dof if residuals.size else 0.0
    slope_se = math.sqrt(resid_var / float(((lx - lx.mean()) ** 2).sum()))
    return {"experiment": "adaptivity", "p_rule": str(config.p_rule),
            "collection": config.collection_kind, "replications": config.replications,
            "seed": config.seed, "rows": rows,
            "slope": float(coef[0]), "slope_se": slope_se, "intercept": float(coef[1])}


def kolmogorov_smirnov(values: np.ndarray, cdf) -> float:
    """Two-sided KS statistic of the sample against a continuous CDF."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    f = np.asarray(cdf(x))
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))
