"""Weighted least-absolute-deviation location problems.

The scalar problem ``argmin_theta sum_i w_i |v_i - theta|`` is solved exactly by
the weighted median. When the cumulative weight hits exactly half the total at
some order statistic, every point up to the next order statistic is a minimizer;
the smallest one is returned so the result matches the convention
``Q(Z) = inf{z : P(Z <= z) >= 1/2}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NoMassError

__all__ = ["WeightedSample", "weighted_median", "lad_objective", "subgradient_gap"]

# Relative slack on the half-mass comparison; absorbs cumsum rounding so exact
# ties still resolve to the smaller minimizer.
_TIE_RTOL = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class WeightedSample:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise DataError(f"values and weights differ in length ({v.size} vs {w.size})")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DataError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(v)):
            raise DataError("values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def _wmedian(values: np.ndarray, weights: np.ndarray) -> float:
    # Hot path: no validation, zero weights allowed.
    keep = weights > 0
    if not keep.all():
        values = values[keep]
        weights = weights[keep]
    if values.size == 0:
        raise NoMassError("all weights are zero")
    if values.size == 1:
        return float(values[0])
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    total = cw[-1]
    k = int(np.searchsorted(2.0 * cw, total * (1.0 - _TIE_RTOL), side="left"))
    return float(values[order[min(k, values.size - 1)]])


def weighted_median(sample, weights=None) -> float:
    """Smallest minimizer of ``sum w_i |v_i - theta|``.

    Accepts either a :class:`WeightedSample` or ``(values, weights)`` arrays.
    Raises :class:`NoMassError` when the total weight is zero.
    """
    if weights is not None:
        sample = WeightedSample(sample, weights)
    return _wmedian(sample.values, sample.weights)


def lad_objective(sample, theta: float, weights=None) -> float:
    """``sum_i w_i |v_i - theta|``."""
    if weights is not None:
        sample = WeightedSample(sample, weights)
    return float(np.sum(sample.weights * np.abs(sample.values - theta)))


def subgradient_gap(sample: WeightedSample, theta: float) -> float:
    """|sum_i w_i (1{v_i <= theta} - 1/2)|, the discrete optimality residual.

    At the weighted median this never exceeds the largest weight sitting
    exactly at ``theta``.
    """
    ind = (sample.values <= theta).astype(float)
    return float(abs(np.sum(sample.weights * (ind - 0.5))))
