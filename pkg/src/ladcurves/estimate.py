"""Local-median estimates of the location curve mu and the scale curve s.

All fits pool observations across subjects. Kernel weights are
``K((x_ij - x) / h)``; the normalizing ``1/h`` is irrelevant for a weighted
median and is omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dgp import Dataset
from .exceptions import ConfigurationError, DegenerateFitError, ExtrapolationError, NoMassError
from .kernel import KernelSpec, make_kernel
from .lad_core import _wmedian

__all__ = [
    "FitConfig",
    "CurveEstimate",
    "window",
    "fit_mu_raw",
    "fit_mu_jackknife",
    "fit_s_raw",
    "fit_s_jackknife",
    "fit_s_alternative",
    "fit_local_mean",
    "fit_curves",
    "default_grid",
    "fit_mu_curve",
]

SQRT2 = math.sqrt(2.0)
ESTIMATORS = ("MuRaw", "MuJackknife", "SRaw", "SJackknife", "SAlternative", "MuLocalMean")


def window(xs: np.ndarray, x: float, h: float, kernel: KernelSpec):
    """Slice bounds and kernel weights of sorted ``xs`` around ``x``."""
    lo = int(np.searchsorted(xs, x - h, side="left"))
    hi = int(np.searchsorted(xs, x + h, side="right"))
    return lo, hi, kernel((xs[lo:hi] - x) / h)


def _local_median(xs, ys, x, h, kernel):
    lo, hi, w = window(xs, x, h, kernel)
    return _wmedian(ys[lo:hi], w)


def _local_jackknife(xs, ys, x, h, kernel):
    return 2.0 * _local_median(xs, ys, x, h, kernel) - _local_median(xs, ys, x, SQRT2 * h, kernel)


def _check_bandwidth(h):
    if not h > 0 or not math.isfinite(h):
        raise ConfigurationError(f"bandwidth must be positive, got {h}")


def fit_mu_raw(data: Dataset, x: float, bandwidth: float, kernel: KernelSpec | str = "epanechnikov") -> float:
    """Weighted median of all ``Y_ij`` with weights ``K((x_ij - x)/b)``."""
    _check_bandwidth(bandwidth)
    xs, ys, _ = data.pooled
    return _local_median(xs, ys, float(x), float(bandwidth), make_kernel(kernel))


def fit_mu_jackknife(data: Dataset, x: float, bandwidth: float, kernel: KernelSpec | str = "epanechnikov") -> float:
    """``2 mu_hat(x | b) - mu_hat(x | sqrt2 b)``; cancels the O(b^2) bias."""
    _check_bandwidth(bandwidth)
    xs, ys, _ = data.pooled
    return _local_jackknife(xs, ys, float(x), float(bandwidth), make_kernel(kernel))


def _s_raw(xs, ys, x, h, mu_x, kernel):
    lo, hi, w = window(xs, x, h, kernel)
    return _wmedian(np.abs(ys[lo:hi] - mu_x), w)


def fit_s_raw(data: Dataset, x: float, bandwidth_s: float, mu_tilde_at_x: float,
              kernel: KernelSpec | str = "epanechnikov") -> float:
    """Weighted median of ``|Y_ij - mu_tilde(x)|`` with bandwidth ``h``.

    The same plug-in value ``mu_tilde(x)`` is used for every observation in the
    window.
    """
    _check_bandwidth(bandwidth_s)
    if not math.isfinite(mu_tilde_at_x):
        raise ConfigurationError("mu_tilde_at_x must be finite")
    xs, ys, _ = data.pooled
    return _s_raw(xs, ys, float(x), float(bandwidth_s), float(mu_tilde_at_x), make_kernel(kernel))


def fit_s_jackknife(data: Dataset, x: float, bandwidth_s: float, mu_tilde_at_x: float,
                    kernel: KernelSpec | str = "epanechnikov") -> float:
    """``2 s_hat(x | h) - s_hat(x | sqrt2 h)``. Can be negative in small samples."""
    _check_bandwidth(bandwidth_s)
    kernel = make_kernel(kernel)
    xs, ys, _ = data.pooled
    h = float(bandwidth_s)
    return 2.0 * _s_raw(xs, ys, x, h, mu_tilde_at_x, kernel) - _s_raw(xs, ys, x, SQRT2 * h, mu_tilde_at_x, kernel)


@dataclass
class CurveEstimate:
    grid: np.ndarray
    values: np.ndarray
    estimator: str
    bandwidths_used: dict = field(default_factory=dict)
    n_effective: np.ndarray | None = None
    flags: np.ndarray | None = None

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.n_effective is None:
            self.n_effective = np.zeros(self.grid.size, dtype=int)
        if self.flags is None:
            self.flags = np.zeros(self.grid.size, dtype=bool)

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.values)

    def interpolate(self, x) -> np.ndarray:
        """Piecewise-linear interpolation over the finite grid values."""
        ok = np.isfinite(self.values)
        g, v = self.grid[ok], self.values[ok]
        x = np.asarray(x, dtype=float)
        if g.size == 0:
            raise ExtrapolationError("curve has no finite values")
        span = 1e-12 * max(1.0, abs(g[-1] - g[0]))
        if np.any(x < g[0] - span) or np.any(x > g[-1] + span):
            raise ExtrapolationError(
                f"points in [{x.min():.6g}, {x.max():.6g}] fall outside the grid hull "
                f"[{g[0]:.6g}, {g[-1]:.6g}]"
            )
        return np.interp(x, g, v)


def fit_s_alternative(data: Dataset, x: float, bandwidth_s: float, mu_tilde_curve: CurveEstimate,
                      kernel: KernelSpec | str = "epanechnikov") -> float:
    """Weighted median of ``|Y_ij - mu_tilde(x_ij)|``, mu_tilde interpolated linearly."""
    _check_bandwidth(bandwidth_s)
    kernel = make_kernel(kernel)
    xs, ys, _ = data.pooled
    lo, hi, w = window(xs, float(x), float(bandwidth_s), kernel)
    keep = w > 0
    if not keep.any():
        raise NoMassError(f"no observations within {bandwidth_s} of {x}")
    xw = xs[lo:hi][keep]
    resid = np.abs(ys[lo:hi][keep] - mu_tilde_curve.interpolate(xw))
    return _wmedian(resid, w[keep])


def fit_local_mean(data: Dataset, x: float, bandwidth: float, kernel: KernelSpec | str = "epanechnikov") -> float:
    """Nadaraya-Watson local average; the least-squares counterpart of :func:`fit_mu_raw`."""
    _check_bandwidth(bandwidth)
    xs, ys, _ = data.pooled
    lo, hi, w = window(xs, float(x), float(bandwidth), make_kernel(kernel))
    tot = w.sum()
    if tot <= 0:
        raise NoMassError(f"no observations within {bandwidth} of {x}")
    return float(np.dot(w, ys[lo:hi]) / tot)


def default_grid(domain, margin: float, size: int = 101) -> np.ndarray:
    a, b = domain
    if a + margin > b - margin:
        raise ConfigurationError(f"margin {margin} leaves no interior in [{a}, {b}]")
    return np.linspace(a + margin, b - margin, size)


@dataclass
class FitConfig:
    """Bandwidths, kernel and grid for :func:`fit_curves`.

    ``epsilon_margin`` defaults to ``sqrt2 * max(b, h)`` so that no kernel
    window, including the widened jackknife one, leaves ``[a, b]``.
    """

    bandwidth_mu: float
    bandwidth_s: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    grid: np.ndarray | None = None
    epsilon_margin: float | None = None
    grid_size: int = 101
    clamp_negative_scale: bool = False

    def __post_init__(self):
        self.kernel = make_kernel(self.kernel)
        _check_bandwidth(self.bandwidth_mu)
        _check_bandwidth(self.bandwidth_s)
        if self.epsilon_margin is None:
            self.epsilon_margin = SQRT2 * max(self.bandwidth_mu, self.bandwidth_s)

    def resolve_grid(self, domain) -> np.ndarray:
        a, b = domain
        half = (b - a) / 2
        if self.bandwidth_mu >= half or self.bandwidth_s >= half:
            raise ConfigurationError("bandwidths must be smaller than half the domain length")
        if self.grid is None:
            return default_grid(domain, self.epsilon_margin, self.grid_size)
        grid = np.asarray(self.grid, dtype=float)
        eps = self.epsilon_margin
        if np.any(grid < a + eps - 1e-12) or np.any(grid > b - eps + 1e-12):
            raise ConfigurationError(f"grid points must lie in [{a + eps}, {b - eps}]")
        return grid


def _n_effective(xs, x, h, kernel) -> int:
    _, _, w = window(xs, x, h, kernel)
    return int(np.count_nonzero(w))


def fit_curves(data: Dataset, config: FitConfig) -> tuple[CurveEstimate, CurveEstimate]:
    """Jackknife location and scale curves on the configured grid.

    Grid points whose windows are empty are reported as NaN. Negative jackknife
    scale values are kept and flagged unless ``clamp_negative_scale`` is set.
    """
    grid = config.resolve_grid(data.domain)
    xs, ys, _ = data.pooled
    k = config.kernel
    b, h = float(config.bandwidth_mu), float(config.bandwidth_s)
    mu = np.full(grid.size, np.nan)
    s = np.full(grid.size, np.nan)
    n_mu = np.zeros(grid.size, dtype=int)
    n_s = np.zeros(grid.size, dtype=int)
    for g, x in enumerate(grid):
        n_mu[g] = _n_effective(xs, x, b, k)
        n_s[g] = _n_effective(xs, x, h, k)
        try:
            mu[g] = _local_jackknife(xs, ys, x, b, k)
        except NoMassError:
            continue
        try:
            s[g] = 2.0 * _s_raw(xs, ys, x, h, mu[g], k) - _s_raw(xs, ys, x, SQRT2 * h, mu[g], k)
        except NoMassError:
            pass
    if not np.isfinite(mu).any():
        raise DegenerateFitError("no grid point has observations within the bandwidth")
    negative = np.isfinite(s) & (s < 0)
    if config.clamp_negative_scale:
        s = np.where(negative, 0.0, s)
    used = {"bandwidth_mu": b, "bandwidth_s": h, "kernel": k.family}
    return (
        CurveEstimate(grid, mu, "MuJackknife", dict(used), n_mu),
        CurveEstimate(grid, s, "SJackknife", dict(used), n_s, negative),
    )


def fit_mu_curve(data: Dataset, grid, bandwidth: float, kernel: KernelSpec | str = "epanechnikov",
                 method: str = "jackknife") -> CurveEstimate:
    """Location curve on ``grid``: ``method`` is "raw", "jackknife" or "mean" (Nadaraya-Watson).

    Empty windows give NaN.
    """
    _check_bandwidth(bandwidth)
    kernel = make_kernel(kernel)
    grid = np.asarray(grid, dtype=float)
    xs, ys, _ = data.pooled
    h = float(bandwidth)
    fits = {
        "raw": ("MuRaw", lambda x: _local_median(xs, ys, x, h, kernel)),
        "jackknife": ("MuJackknife", lambda x: _local_jackknife(xs, ys, x, h, kernel)),
        "mean": ("MuLocalMean", lambda x: fit_local_mean(data, x, h, kernel)),
    }
    if method not in fits:
        raise ConfigurationError(f"unknown method {method!r}")
    name, fn = fits[method]
    vals = np.full(grid.size, np.nan)
    for g, x in enumerate(grid):
        try:
            vals[g] = fn(x)
        except NoMassError:
            pass
    neff = np.array([_n_effective(xs, x, h, kernel) for x in grid], dtype=int)
    return CurveEstimate(grid, vals, name, {"bandwidth_mu": h, "kernel": kernel.family}, neff)
