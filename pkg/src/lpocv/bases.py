"""Orthonormal projection bases on [0,1].

Five families are provided: regular histograms, trigonometric polynomials,
single-level Haar scaling functions, multilevel Haar wavelets, and dyadic
piecewise (shifted Legendre) polynomials.  All interval memberships use the
right-open convention, with the last cell closed at 1, so every x in [0,1]
belongs to exactly one cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre_cells, midpoint_nodes

HISTOGRAM = "histogram"
TRIGONOMETRIC = "trigonometric"
HAAR_SCALING = "haar-scaling"
HAAR_WAVELET = "haar-wavelet"
PIECEWISE_POLY = "piecewise-poly"

FAMILIES = (HISTOGRAM, TRIGONOMETRIC, HAAR_SCALING, HAAR_WAVELET, PIECEWISE_POLY)


@dataclass(frozen=True)
class Model:
    """An orthonormal basis family spanning one candidate model.

    `index_set` is the ordered tuple of basis labels; its length is `dim`.
    Models are immutable and safe to share across workers.
    """

    family: str
    params: tuple[tuple[str, int], ...]
    dim: int
    index_set: tuple

    def param(self, name: str) -> int:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    @property
    def label(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.family}({inner})"

    def describe(self) -> dict:
        """JSON-serializable descriptor {family, params}."""
        return {"family": self.family, "params": dict(self.params)}

    # evaluation ----------------------------------------------------------

    def eval_row(self, pos: int, x) -> np.ndarray:
        """Values of the basis function at position `pos` on points x."""
        if not 0 <= pos < self.dim:
            raise IndexError(f"basis position {pos} outside 0..{self.dim - 1}")
        x = _check_points(x)
        return _EVAL_ROW[self.family](self, pos, x)

    def eval_all(self, x) -> np.ndarray:
        """Matrix of shape (dim, len(x)) with all basis values."""
        x = _check_points(x)
        return np.vstack([_EVAL_ROW[self.family](self, i, x) for i in range(self.dim)])

    def cell_edges(self) -> np.ndarray | None:
        """Partition breakpoints for piecewise families, None for trig."""
        return _CELL_EDGES[self.family](self)

    def piecewise_constant(self) -> bool:
        return self.family in (HISTOGRAM, HAAR_SCALING, HAAR_WAVELET)

    def max_cell_degree(self) -> int:
        if self.family == PIECEWISE_POLY:
            return self.param("degree_bound") - 1
        return 0


def _check_points(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        bad = x[(x < 0.0) | (x > 1.0)][0]
        raise ValueError(f"evaluation point {bad!r} outside [0, 1]")
    return x


def _cell_index(x: np.ndarray, cells: int) -> np.ndarray:
    # right-open cells, last cell closed at 1
    return np.minimum((x * cells).astype(np.int64), cells - 1)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_histogram_model(bins: int) -> Model:
    """Regular histogram basis: phi_l = 1_{I_l} / sqrt(|I_l|), |I_l| = 1/bins."""
    if bins < 1:
        raise ValueError("bin count must be >= 1")
    return Model(HISTOGRAM, (("bins", bins),), bins, tuple(range(bins)))


def make_trig_model(cutoff: int) -> Model:
    """Trigonometric basis: 1, sqrt(2) sin(2 pi k x), sqrt(2) cos(2 pi k x), k <= cutoff."""
    if cutoff < 0:
        raise ValueError("frequency cutoff must be >= 0")
    return Model(TRIGONOMETRIC, (("cutoff", cutoff),), 2 * cutoff + 1,
                 tuple(range(2 * cutoff + 1)))


def make_haar_scaling_model(level: int) -> Model:
    """One level of Haar scaling functions: 2^{j/2} 1_{[k 2^-j, (k+1) 2^-j)}."""
    if level < 0:
        raise ValueError("level must be >= 0")
    return Model(HAAR_SCALING, (("level", level),), 2 ** level,
                 tuple((level, k) for k in range(2 ** level)))


def make_haar_wavelet_model(max_level: int) -> Model:
    """Father function plus Haar wavelets psi_{j,k} for all levels j <= max_level."""
    if max_level < 0:
        raise ValueError("max level must be >= 0")
    idx = [("phi",)]
    for j in range(max_level + 1):
        idx.extend(("psi", j, k) for k in range(2 ** j))
    return Model(HAAR_WAVELET, (("max_level", max_level),), len(idx), tuple(idx))


def make_haar_model(kind: str, level: int) -> Model:
    """Haar basis; kind is 'scaling' (one level j) or 'wavelet' (levels <= J).

    Only these two orthonormal readings are offered: scaling functions taken
    across several levels are not orthonormal and cannot be constructed.
    """
    if kind == "scaling":
        return make_haar_scaling_model(level)
    if kind == "wavelet":
        return make_haar_wavelet_model(level)
    raise ValueError(f"unknown Haar kind {kind!r}; use 'scaling' or 'wavelet'")


def make_piecewise_poly_model(depth: int, degree_bound: int) -> Model:
    """Orthonormalized shifted Legendre polynomials of degree < degree_bound
    on each of 2**depth dyadic cells; dimension degree_bound * 2**depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if degree_bound < 1:
        raise ValueError("degree bound must be >= 1")
    idx = tuple((c, d) for c in range(2 ** depth) for d in range(degree_bound))
    return Model(PIECEWISE_POLY, (("depth", depth), ("degree_bound", degree_bound)),
                 degree_bound * 2 ** depth, idx)


_DESCRIPTOR_BUILDERS = {
    HISTOGRAM: lambda p: make_histogram_model(p["bins"]),
    TRIGONOMETRIC: lambda p: make_trig_model(p["cutoff"]),
    HAAR_SCALING: lambda p: make_haar_scaling_model(p["level"]),
    HAAR_WAVELET: lambda p: make_haar_wavelet_model(p["max_level"]),
    PIECEWISE_POLY: lambda p: make_piecewise_poly_model(p["depth"], p["degree_bound"]),
}


def model_from_descriptor(desc: dict) -> Model:
    """Rebuild a model from its {family, params} descriptor."""
    try:
        family = desc["family"]
        params = desc["params"]
    except (KeyError, TypeError):
        raise ValueError("model descriptor must be {'family': ..., 'params': {...}}")
    if family not in _DESCRIPTOR_BUILDERS:
        raise ValueError(f"unknown basis family {family!r}")
    try:
        return _DESCRIPTOR_BUILDERS[family]({k: int(v) for k, v in params.items()})
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad parameters for family {family!r}: {exc}")


# ---------------------------------------------------------------------------
# per-family evaluation
# ---------------------------------------------------------------------------

def _hist_row(model: Model, pos: int, x: np.ndarray) -> np.ndarray:
    D = model.dim
    return np.where(_cell_index(x, D) == pos, math.sqrt(D), 0.0)


def _trig_row(model: Model, pos: int, x: np.ndarray) -> np.ndarray:
    if pos == 0:
        return np.ones_like(x)
    k = (pos + 1) // 2
    f = np.sin if pos % 2 == 1 else np.cos
    return math.sqrt(2.0) * f(2.0 * np.pi * k * x)


def _haar_scaling_row(model: Model, pos: int, x: np.ndarray) -> np.ndarray:
    j, k = model.index_set[pos]
    return np.where(_cell_index(x, 2 ** j) == k, 2.0 ** (j / 2.0), 0.0)


def _haar_wavelet_row(model: Model, pos: int, x: np.ndarray) -> np.ndarray:
    lab = model.index_set[pos]
    if lab == ("phi",):
        return np.ones_like(x)
    _, j, k = lab
    cell = _cell_index(x, 2 ** j)
    halves = _cell_index(x, 2 ** (j + 1))
    sign = np.where(halves % 2 == 0, 1.0, -1.0)
    return np.where(cell == k, sign * 2.0 ** (j / 2.0), 0.0)


def _legendre_shifted(d: int, t: np.ndarray) -> np.ndarray:
    # orthonormal on [0,1]: sqrt(2d+1) * P_d(2t-1)
    coeffs = np.zeros(d + 1)
    coeffs[d] = 1.0
    return math.sqrt(2 * d + 1) * np.polynomial.legendre.legval(2.0 * t - 1.0, coeffs)


def _pp_row(model: Model, pos: int, x: np.ndarray) -> np.ndarray:
    depth = model.param("depth")
    cells = 2 ** depth
    c, d = model.index_set[pos]
    inside = _cell_index(x, cells) == c
    t = np.clip(x * cells - c, 0.0, 1.0)
    vals = math.sqrt(cells) * _legendre_shifted(d, t)
    return np.where(inside, vals, 0.0)


_EVAL_ROW = {
    HISTOGRAM: _hist_row,
    TRIGONOMETRIC: _trig_row,
    HAAR_SCALING: _haar_scaling_row,
    HAAR_WAVELET: _haar_wavelet_row,
    PIECEWISE_POLY: _pp_row,
}

_CELL_EDGES = {
    HISTOGRAM: lambda m: np.linspace(0.0, 1.0, m.dim + 1),
    TRIGONOMETRIC: lambda m: None,
    HAAR_SCALING: lambda m: np.linspace(0.0, 1.0, 2 ** m.param("level") + 1),
    HAAR_WAVELET: lambda m: np.linspace(0.0, 1.0, 2 ** (m.param("max_level") + 1) + 1),
    PIECEWISE_POLY: lambda m: np.linspace(0.0, 1.0, 2 ** m.param("depth") + 1),
}


# ---------------------------------------------------------------------------
# analytic sup norms and numerical orthonormality
# ---------------------------------------------------------------------------

def eval_basis(model: Model, index, x: float) -> float:
    """phi_lambda(x) for a basis label of the model; pure in its inputs."""
    try:
        pos = model.index_set.index(index)
    except ValueError:
        raise ValueError(f"index {index!r} not in model {model.label}")
    return float(model.eval_row(pos, np.asarray([x]))[0])


def phi_m_sup(model: Model) -> float:
    """Analytic sup norm of phi_m = sum_l phi_l^2.

    Constant families attain it everywhere; piecewise polynomials attain
    r^2 * 2^depth at cell edges, within the documented (r+1)(2r+1) D_m bound.
    """
    fam = model.family
    if fam == HISTOGRAM:
        return float(model.dim)
    if fam == TRIGONOMETRIC:
        return float(model.dim)
    if fam == HAAR_SCALING:
        return float(2 ** model.param("level"))
    if fam == HAAR_WAVELET:
        return float(2 ** (model.param("max_level") + 1))
    if fam == PIECEWISE_POLY:
        r = model.param("degree_bound")
        return float(r * r * 2 ** model.param("depth"))
    raise ValueError(f"unknown family {fam!r}")


def sup_linear_combination_sq(model: Model) -> float:
    """Analytic bound on sup_x |sum_l a_l phi_l(x)|^2 over |a|_inf = 1.

    Partition families bound the (few) functions active at a point; the
    trigonometric bound sqrt(2) D_m is conservative but analytic.
    """
    fam = model.family
    if fam in (HISTOGRAM, HAAR_SCALING):
        return phi_m_sup(model)  # one active function per point
    if fam == TRIGONOMETRIC:
        return 2.0 * model.dim ** 2
    if fam == HAAR_WAVELET:
        J = model.param("max_level")
        total = 1.0 + sum(2.0 ** (j / 2.0) for j in range(J + 1))
        return total * total
    if fam == PIECEWISE_POLY:
        # Cauchy-Schwarz over the degree_bound functions active per cell
        return model.param("degree_bound") * phi_m_sup(model)
    raise ValueError(f"unknown family {fam!r}")


def gram_matrix(model: Model) -> np.ndarray:
    """Numerical Gram matrix of the basis; identity within 1e-8 by contract.

    Partition families use per-cell Gauss-Legendre (exact for their products);
    the trigonometric family uses the reference midpoint rule, which is exact
    for full-period trig products at this resolution.
    """
    edges = model.cell_edges()
    if edges is None:
        x = midpoint_nodes()
        w = np.full(x.size, 1.0 / x.size)
    else:
        x, w = gauss_legendre_cells(edges, model.max_cell_degree() + 1)
    vals = model.eval_all(x)
    return (vals * w) @ vals.T
