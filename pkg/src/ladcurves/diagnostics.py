"""Kernel-weighted empirical processes, their coupled versions, and oscillation.

For weights ``w_ij(x) = K((x_ij - x)/b)`` the process is
``F(x, y) = sum_ij w_ij(x) 1{Y_ij <= y}``; the coupled process uses the responses
built from coupled errors on the same design. ``D(delta, x, y)`` is the
increment of the centred process between ``y`` and ``y + delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dgp import Dataset, DesignSpec, ErrorModel, TrueCurves, generate_design, synthesize_coupled_pair, synthesize_dataset
from .exceptions import ConfigurationError, DataError
from .kernel import KernelSpec, make_kernel

__all__ = [
    "EmpiricalProcessFrame",
    "Truth",
    "coupling_lag_rule",
    "process_weights",
    "eval_F",
    "sup_coupling_discrepancy",
    "centering_mc",
    "modulus_of_continuity",
    "phi_n",
    "loglog_slope",
    "coupling_discrepancy_sweep",
    "modulus_sweep",
]


@dataclass(frozen=True)
class Truth:
    """Generative description needed to re-draw errors on a fixed design."""

    design: tuple
    curves: TrueCurves
    model: ErrorModel
    domain: tuple


@dataclass
class EmpiricalProcessFrame:
    dataset: Dataset
    coupled_dataset: Dataset | None
    bandwidth: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    coupling_lag: int = 0
    truth: Truth | None = None

    def __post_init__(self):
        self.kernel = make_kernel(self.kernel)
        if not self.bandwidth > 0:
            raise ConfigurationError("bandwidth must be positive")
        if self.coupled_dataset is not None:
            a, c = self.dataset, self.coupled_dataset
            same = a.n_subjects == c.n_subjects and all(
                np.array_equal(s.x, t.x) for s, t in zip(a.subjects, c.subjects))
            if not same:
                raise DataError("original and coupled datasets must share the design")

    @classmethod
    def simulate(cls, design, curves: TrueCurves, model: ErrorModel, coupling_lag: int,
                 bandwidth: float, seed: int, kernel="epanechnikov") -> "EmpiricalProcessFrame":
        if isinstance(design, DesignSpec):
            dom = (design.a, design.b)
            design = generate_design(design, seed)
        else:
            allx = np.concatenate(design)
            dom = (float(allx.min()), float(allx.max()))
        data, coupled = synthesize_coupled_pair(design, curves, model, coupling_lag, seed, domain=dom)
        truth = Truth(tuple(np.asarray(x) for x in design), curves, model, dom)
        return cls(data, coupled, bandwidth, make_kernel(kernel), coupling_lag, truth)

    def responses(self, use_coupled: bool = False) -> np.ndarray:
        if use_coupled:
            if self.coupled_dataset is None:
                raise ConfigurationError("frame has no coupled dataset")
            return self.coupled_dataset.pooled[1]
        return self.dataset.pooled[1]


def coupling_lag_rule(N: int, lam: float = 3.0) -> int:
    """``floor(lam * log N)``."""
    return int(math.floor(lam * math.log(N)))


def process_weights(frame: EmpiricalProcessFrame, x) -> np.ndarray:
    """Weights of every pooled observation at ``x`` (array of shape ``(len(x), N)``)."""
    xs = frame.dataset.pooled[0]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return frame.kernel((xs[None, :] - x[:, None]) / frame.bandwidth)


def eval_F(frame: EmpiricalProcessFrame, x: float, y: float, use_coupled: bool = False) -> float:
    w = process_weights(frame, x)[0]
    return float(np.sum(w[frame.responses(use_coupled) <= y]))


def phi_n(frame: EmpiricalProcessFrame, x_grid) -> float:
    """``max_x sum_ij w_ij(x)^2`` over ``x_grid``."""
    return float(np.max(np.sum(process_weights(frame, x_grid) ** 2, axis=1)))


def sup_coupling_discrepancy(frame: EmpiricalProcessFrame, x_grid, y_grid=None) -> float:
    """``max |F(x, y) - F~(x, y)|`` over ``x_grid`` and all ``y``.

    Both processes are right-continuous steps jumping only at observed
    responses, so the supremum over ``y`` is attained on the union of the jump
    points; extra ``y_grid`` values are evaluated too but cannot raise it.
    """
    y0 = frame.responses(False)
    y1 = frame.responses(True)
    extra = np.empty(0) if y_grid is None else np.asarray(y_grid, dtype=float).ravel()
    W = process_weights(frame, x_grid)
    best = 0.0
    for w in W:
        keep = w > 0
        if not keep.any():
            continue
        wk = w[keep]
        pos = np.concatenate([y0[keep], y1[keep], extra])
        jump = np.concatenate([wk, -wk, np.zeros(extra.size)])
        order = np.argsort(pos, kind="stable")
        pos, csum = pos[order], np.cumsum(jump[order])
        last = np.r_[pos[1:] != pos[:-1], True]
        best = max(best, float(np.max(np.abs(csum[last]))))
    return best


def centering_mc(truth: Truth, W: np.ndarray, y_values, replications: int = 200, seed: int = 0):
    """Monte Carlo ``E F(x, y)`` for weight rows ``W`` and thresholds ``y_values``.

    Returns ``(mean, standard_error)`` arrays of shape ``(len(W), len(y_values))``.
    """
    y_values = np.asarray(y_values, dtype=float)
    acc = np.zeros((W.shape[0], y_values.size))
    acc2 = np.zeros_like(acc)
    for r in range(replications):
        data = synthesize_dataset(list(truth.design), truth.curves, truth.model,
                                  seed=int(seed) * 100_003 + r + 1, domain=truth.domain)
        ind = (data.pooled[1][:, None] <= y_values[None, :]).astype(float)
        F = W @ ind
        acc += F
        acc2 += F * F
    mean = acc / replications
    var = np.maximum(acc2 / replications - mean**2, 0.0)
    return mean, np.sqrt(var / max(replications - 1, 1))


def _centering_exact(frame: EmpiricalProcessFrame, W, y_values):
    from .dgp import error_law

    t = frame.truth
    law = error_law(t.model)
    xs = frame.dataset.pooled[0]
    mu, s = t.curves.mu(xs), t.curves.s(xs)
    cdf = np.vectorize(law.cdf)
    P = cdf((np.asarray(y_values)[None, :] - mu[:, None]) / s[:, None])
    return W @ P, np.zeros((W.shape[0], len(y_values)))


def modulus_of_continuity(frame: EmpiricalProcessFrame, delta_n: float, x_grid, y_grid,
                          replications: int = 200, seed: int = 0, centering: str = "mc",
                          return_details: bool = False):
    """``max |D(delta, x, y)|`` over the grids and ``delta in {delta_n/4, delta_n/2, delta_n}``.

    ``centering="mc"`` estimates ``E F`` by averaging ``replications`` fresh error
    draws on the frame's design; ``"exact"`` integrates the known error law.
    """
    if delta_n < 0:
        raise ConfigurationError("delta_n must be nonnegative")
    if delta_n == 0:
        return (0.0, {"centering_se": 0.0}) if return_details else 0.0
    if frame.truth is None:
        raise ConfigurationError("centering needs frame.truth (design, curves, model)")
    y_grid = np.asarray(y_grid, dtype=float)
    deltas = np.array([delta_n / 4, delta_n / 2, delta_n])
    y_all = np.unique(np.concatenate([y_grid] + [y_grid + d for d in deltas]))
    W = process_weights(frame, x_grid)
    if centering == "mc":
        mean, se = centering_mc(frame.truth, W, y_all, replications, seed)
    elif centering == "exact":
        mean, se = _centering_exact(frame, W, y_all)
    else:
        raise ConfigurationError(f"unknown centering {centering!r}")
    ys = frame.responses(False)
    F = W @ (ys[:, None] <= y_all[None, :]).astype(float)
    centred = F - mean
    base = np.searchsorted(y_all, y_grid)
    best, best_se = 0.0, 0.0
    for d in deltas:
        up = np.searchsorted(y_all, y_grid + d)
        D = centred[:, up] - centred[:, base]
        k = np.unravel_index(np.argmax(np.abs(D)), D.shape)
        if abs(D[k]) > best:
            best = float(abs(D[k]))
            best_se = float(math.hypot(se[k[0], up[k[1]]], se[k[0], base[k[1]]]))
    if return_details:
        return best, {"centering_se": best_se, "phi_n": phi_n(frame, x_grid)}
    return best


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` on ``log x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def coupling_discrepancy_sweep(sizes, curves: TrueCurves, model: ErrorModel, lam: float = 3.0,
                               bandwidth: float = 0.1, seeds: int = 10, seed: int = 0,
                               x_grid_size: int = 21, n_subjects: int | None = None) -> list[dict]:
    """Median ``sup |F - F~|`` for each total size ``N`` with ``k = floor(lam log N)``."""
    rows = []
    for N in sizes:
        n = n_subjects or max(1, int(round(math.sqrt(N))))
        sizes_i = tuple(np.diff(np.round(np.linspace(0, N, n + 1)).astype(int)))
        design = DesignSpec(subject_sizes=sizes_i, a=curves.domain[0], b=curves.domain[1])
        k = coupling_lag_rule(N, lam)
        grid = np.linspace(design.a + bandwidth, design.b - bandwidth, x_grid_size)
        vals = []
        for r in range(seeds):
            frame = EmpiricalProcessFrame.simulate(design, curves, model, k, bandwidth,
                                                   seed=int(seed) * 7919 + 31 * N + r)
            vals.append(sup_coupling_discrepancy(frame, grid))
        rows.append({"N": int(N), "coupling_lag": k, "median_discrepancy": float(np.median(vals)),
                     "discrepancies": np.asarray(vals)})
    return rows


def modulus_sweep(frame: EmpiricalProcessFrame, deltas, x_grid, y_grid, replications: int = 200,
                  seed: int = 0, centering: str = "mc") -> list[dict]:
    """``sup |D|`` for each ``delta_n``; the centring draws are shared across deltas."""
    rows = []
    for d in deltas:
        val, det = modulus_of_continuity(frame, d, x_grid, y_grid, replications, seed, centering,
                                         return_details=True)
        rows.append({"delta": float(d), "sup_abs_D": val, **det})
    return rows
