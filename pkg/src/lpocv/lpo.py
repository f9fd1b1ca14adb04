"""Leave-p-out risk estimation: closed forms, fast paths, and oracles.

The closed form needs only the per-function sums S_l = sum_j phi_l(X_j) and
Q_l = sum_j phi_l^2(X_j); the cross term sum_{j!=k} phi_l(X_j) phi_l(X_k)
is S_l^2 - Q_l.  Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bases import HAAR_SCALING, HAAR_WAVELET, HISTOGRAM, Model, make_haar_scaling_model, \
    make_histogram_model
from .estimator import Sample, as_sample, eval_density, fit_projection

DEFAULT_BRUTE_CAP = 10 ** 6


class CapExceeded(RuntimeError):
    """Raised when brute-force enumeration would exceed the split cap."""


@dataclass(frozen=True)
class SufficientStats:
    """Per-function sums S_l and Q_l for the closed-form risk."""

    first: np.ndarray
    second: np.ndarray
    n: int


@dataclass(frozen=True)
class LpoRisk:
    value: float
    n: int
    p: int
    model: str


def _check_p(n: int, p: int) -> None:
    if n < 2:
        raise ValueError(f"need at least two observations, got n={n}")
    if not 1 <= p <= n - 1:
        raise ValueError(f"test-set size p={p} outside 1..{n - 1}")


def bin_counts(sample, cells: int) -> np.ndarray:
    """Right-open cell counts of the sample over a regular partition."""
    sample = as_sample(sample)
    idx = np.minimum((sample.values * cells).astype(np.int64), cells - 1)
    return np.bincount(idx, minlength=cells)


def sufficient_stats(model: Model, sample) -> SufficientStats:
    """S_l and Q_l for every basis function.

    Partition families take one exact value per cell, so their sums reduce to
    cell counts; other families are evaluated row by row with fsum.
    """
    sample = as_sample(sample)
    n = sample.n
    if model.family in (HISTOGRAM, HAAR_SCALING):
        cells = model.dim if model.family == HISTOGRAM else 2 ** model.param("level")
        v = math.sqrt(cells)
        c = bin_counts(sample, cells).astype(np.float64)
        return SufficientStats(v * c, cells * c, n)
    if model.family == HAAR_WAVELET:
        J = model.param("max_level")
        halves = bin_counts(sample, 2 ** (J + 1)).astype(np.float64)
        first = np.empty(model.dim)
        second = np.empty(model.dim)
        first[0] = second[0] = float(n)
        pos = 1
        for j in range(J + 1):
            lvl = halves.reshape(2 ** (j + 1), -1).sum(axis=1)
            left, right = lvl[0::2], lvl[1::2]
            first[pos:pos + 2 ** j] = 2.0 ** (j / 2.0) * (left - right)
            second[pos:pos + 2 ** j] = 2.0 ** j * (left + right)
            pos += 2 ** j
        return SufficientStats(first, second, n)
    first = np.empty(model.dim)
    second = np.empty(model.dim)
    for pos in range(model.dim):
        row = model.eval_row(pos, sample.values)
        first[pos] = math.fsum(row)
        second[pos] = math.fsum(row * row)
    return SufficientStats(first, second, n)


def lpo_risk_from_stats(model: Model, stats: SufficientStats, p: int) -> LpoRisk:
    """General closed form: (1/(n(n-p))) sum_l [Q_l - ((n-p+1)/(n-1)) (S_l^2 - Q_l)]."""
    n = stats.n
    _check_p(n, p)
    ratio = (n - p + 1) / (n - 1)  # computed once, outside the loop
    total = math.fsum(q - ratio * (s * s - q)
                      for s, q in zip(stats.first, stats.second))
    return LpoRisk(total / (n * (n - p)), n, p, model.label)


def lpo_risk_closed(model: Model, sample, p: int) -> LpoRisk:
    """O(n D_m) leave-p-out risk of the projection estimator on the model."""
    sample = as_sample(sample)
    _check_p(sample.n, p)
    return lpo_risk_from_stats(model, sufficient_stats(model, sample), p)


def lpo_risk_hist_fast(bins: int, sample, p: int) -> LpoRisk:
    """Histogram corollary from bin counts alone:
    (1/((n-1)(n-p))) sum_l (1/|I_l|) [(2n-p) n_l/n - n(n-p+1) (n_l/n)^2]."""
    model = make_histogram_model(bins)
    sample = as_sample(sample)
    n = sample.n
    _check_p(n, p)
    frac = bin_counts(sample, bins) / n
    total = math.fsum(bins * ((2 * n - p) * f - n * (n - p + 1) * f * f) for f in frac)
    return LpoRisk(total / ((n - 1) * (n - p)), n, p, model.label)


def lpo_risk_haar_fast(level: int, sample, p: int) -> LpoRisk:
    """Haar scaling-level corollary; identical spans to a 2**level histogram."""
    model = make_haar_scaling_model(level)
    sample = as_sample(sample)
    n = sample.n
    _check_p(n, p)
    cells = 2 ** level
    frac = bin_counts(sample, cells) / n
    total = math.fsum(cells * ((2 * n - p) * f - n * (n - p + 1) * f * f) for f in frac)
    return LpoRisk(total / ((n - 1) * (n - p)), n, p, model.label)


def lpo_risk_brute(model: Model, sample, p: int, cap: int = DEFAULT_BRUTE_CAP) -> LpoRisk:
    """Exact enumeration over all C(n,p) splits; verification oracle.

    Raises CapExceeded when C(n,p) > cap -- the closed form is the way out.
    """
    sample = as_sample(sample)
    n = sample.n
    _check_p(n, p)
    total_splits = math.comb(n, p)
    if total_splits > cap:
        raise CapExceeded(
            f"C({n},{p}) = {total_splits} splits exceed the cap {cap}; "
            "use the closed form")
    vals = sample.values
    phi = model.eval_all(vals)
    s_all = phi.sum(axis=1)
    parts = []
    batch = 1 << 14
    combos = itertools.combinations(range(n), p)
    while True:
        idx = np.fromiter(itertools.chain.from_iterable(
            itertools.islice(combos, batch)), dtype=np.int64)
        if idx.size == 0:
            break
        idx = idx.reshape(-1, p)
        test_vals = phi[:, idx]                       # (D, B, p)
        coeff = (s_all[:, None] - test_vals.sum(axis=2)) / (n - p)
        norm2 = (coeff * coeff).sum(axis=0)
        shat_at_test = np.einsum("db,dbp->bp", coeff, test_vals)
        parts.append(math.fsum(norm2 - (2.0 / p) * shat_at_test.sum(axis=1)))
    return LpoRisk(math.fsum(parts) / total_splits, n, p, model.label)


# ---------------------------------------------------------------------------
# hold-out and V-fold baselines
# ---------------------------------------------------------------------------

def holdout_risk(model: Model, sample, test_indices) -> float:
    """Test-set contrast of the estimator fitted on the complement split."""
    sample = as_sample(sample)
    n = sample.n
    test = sorted(set(int(i) for i in test_indices))
    if not test:
        raise ValueError("test set is empty")
    if len(test) >= n:
        raise ValueError("test set must be a proper subset of the sample")
    if test[0] < 0 or test[-1] >= n:
        raise ValueError(f"test index outside 0..{n - 1}")
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    est = fit_projection(model, Sample(sample.values[~mask]))
    at_test = eval_density(est, sample.values[mask])
    return est.norm_sq() - 2.0 * math.fsum(at_test) / len(test)


def vfold_risk(model: Model, sample, blocks) -> float:
    """V-fold estimator: (1/V) sum_v (V/n) sum_{i in block v} contrast terms."""
    sample = as_sample(sample)
    n = sample.n
    blocks = [sorted(set(int(i) for i in b)) for b in blocks]
    V = len(blocks)
    if V < 2:
        raise ValueError("need at least two blocks")
    flat = [i for b in blocks for i in b]
    if len(flat) != n or set(flat) != set(range(n)):
        raise ValueError("blocks must partition the sample indices")
    if any(not b or len(b) == n for b in blocks):
        raise ValueError("every block must be nonempty and proper")
    total = 0.0
    for b in blocks:
        mask = np.zeros(n, dtype=bool)
        mask[b] = True
        est = fit_projection(model, Sample(sample.values[~mask]))
        at_test = eval_density(est, sample.values[mask])
        total += (V / n) * (len(b) * est.norm_sq() - 2.0 * math.fsum(at_test))
    return total / V


# ---------------------------------------------------------------------------
# subset-count identities
# ---------------------------------------------------------------------------

def subset_counts(n: int, p: int) -> tuple[int, int, int, int]:
    """The four split counts behind the closed form, for fixed i, j, k:

      #{e : j not in e}                 = C(n-1, p)
      #{e : j not in e, k not in e}     = C(n-2, p)
      #{e : i in e, j,k not in e}       = C(n-3, p-1)
      #{e : i in e, j not in e}         = C(n-2, p-1)

    Exact integers; enumeration-validated.
    """
    if n < 3:
        raise ValueError("the three-index counts need n >= 3")
    _check_p(n, p)
    counts = (math.comb(n - 1, p), math.comb(n - 2, p),
              math.comb(n - 3, p - 1), math.comb(n - 2, p - 1))
    if any(c.bit_length() > 127 for c in counts):
        raise OverflowError("subset counts exceed the exact 128-bit range")
    return counts
