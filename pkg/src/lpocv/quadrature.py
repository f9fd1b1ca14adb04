"""Reference quadrature rules on [0,1].

The package-wide reference rule is a composite midpoint rule on 2**17 equal
subintervals.  Integrands with known breakpoints (partition bases, piecewise
densities) are integrated on a breakpoint-aligned variant so that jumps never
straddle a quadrature cell; piecewise-polynomial products get per-cell
Gauss-Legendre nodes, which are exact for them.
"""

from __future__ import annotations

import numpy as np

MIDPOINT_CELLS = 2 ** 17

_midpoint_cache: dict[int, np.ndarray] = {}


def midpoint_nodes(cells: int = MIDPOINT_CELLS) -> np.ndarray:
    """Midpoints of `cells` equal subintervals of [0,1]; weight is 1/cells."""
    nodes = _midpoint_cache.get(cells)
    if nodes is None:
        nodes = (np.arange(cells) + 0.5) / cells
        nodes.flags.writeable = False
        _midpoint_cache[cells] = nodes
    return nodes


def integrate_midpoint(f, cells: int = MIDPOINT_CELLS) -> float:
    """Integral of f over [0,1] by the reference composite midpoint rule."""
    return float(np.mean(f(midpoint_nodes(cells))))


def _clean_breakpoints(breakpoints) -> np.ndarray:
    pts = np.unique(np.clip(np.asarray(breakpoints, dtype=np.float64), 0.0, 1.0))
    pts = pts[(pts > 0.0) & (pts < 1.0)]
    return np.concatenate(([0.0], pts, [1.0]))


def piecewise_midpoint_nodes(breakpoints, cells: int = MIDPOINT_CELLS):
    """Breakpoint-aligned composite midpoint nodes and weights.

    Each piece [a,b] gets about (b-a)*cells midpoints, so discontinuities at
    the breakpoints never fall inside a quadrature cell.
    """
    edges = _clean_breakpoints(breakpoints)
    xs = []
    ws = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(round((b - a) * cells)))
        xs.append(a + (b - a) * (np.arange(m) + 0.5) / m)
        ws.append(np.full(m, (b - a) / m))
    return np.concatenate(xs), np.concatenate(ws)


def gauss_legendre_cells(edges, order: int):
    """Gauss-Legendre nodes/weights on each cell of a partition of [0,1].

    Exact for integrands that are polynomials of degree <= 2*order-1 on every
    cell, hence for products of two piecewise-polynomial basis functions.
    """
    edges = np.asarray(edges, dtype=np.float64)
    g, gw = np.polynomial.legendre.leggauss(order)
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    xs = (mids[:, None] + 0.5 * widths[:, None] * g[None, :]).ravel()
    ws = (0.5 * widths[:, None] * gw[None, :]).ravel()
    return xs, ws
