"""Projection density estimators and their empirical contrast."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bases import Model


@dataclass(frozen=True)
class Sample:
    """Validated observation vector on [0,1], immutable after ingestion."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).copy()
        if v.ndim != 1 or v.size == 0:
            raise ValueError("sample must be a nonempty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            bad = v[(v < 0.0) | (v > 1.0)][0]
            raise ValueError(f"sample value {bad!r} outside [0, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


def as_sample(values) -> Sample:
    return values if isinstance(values, Sample) else Sample(np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class ProjectionEstimate:
    """Fitted projection estimator: coefficients a_l in index_set order."""

    model: Model
    coeffs: np.ndarray

    def norm_sq(self) -> float:
        """||shat||^2 = sum a_l^2 by orthonormality."""
        return float(math.fsum(float(a) * float(a) for a in self.coeffs))

    def describe(self) -> dict:
        return {"model": self.model.describe(), "coeffs": [float(a) for a in self.coeffs]}


def fit_projection(model: Model, sample) -> ProjectionEstimate:
    """Fit a_l = (1/n) sum_i phi_l(X_i) with compensated summation.

    fsum keeps coefficients exactly permutation-invariant; downstream closed
    forms subtract near-equal O(n^2) terms and need every digit.
    """
    sample = as_sample(sample)
    n = sample.n
    coeffs = np.empty(model.dim)
    for pos in range(model.dim):
        coeffs[pos] = math.fsum(model.eval_row(pos, sample.values)) / n
    coeffs.flags.writeable = False
    return ProjectionEstimate(model, coeffs)


def eval_density(estimate: ProjectionEstimate, x) -> np.ndarray | float:
    """shat(x) = sum_l a_l phi_l(x)."""
    scalar = np.isscalar(x)
    vals = estimate.model.eval_all(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    out = estimate.coeffs @ vals
    return float(out[0]) if scalar else out


def empirical_contrast(estimate: ProjectionEstimate, sample) -> float:
    """Empirical risk P_n gamma(shat) = ||shat||^2 - (2/n) sum_i shat(X_i).

    For projection estimators fitted on this sample the value also equals
    -sum_l a_l^2; tests hold both forms to 1e-12.
    """
    sample = as_sample(sample)
    at_points = eval_density(estimate, sample.values)
    return estimate.norm_sq() - 2.0 * math.fsum(at_points) / sample.n
