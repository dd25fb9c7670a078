"""Leave-one-subject-out cross-validation for the location bandwidth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dgp import Dataset, Subject
from .estimate import _local_jackknife, fit_mu_curve
from .exceptions import ConfigurationError, CvError, NoMassError
from .kernel import KernelSpec, make_kernel

__all__ = ["CvConfig", "cv_score", "cv_terms", "select_bandwidth", "default_candidates",
           "select_scale_bandwidth"]

CRITERIA = ("LS", "LAD")


def default_candidates(data: Dataset, count: int = 12) -> np.ndarray:
    """``count`` log-spaced bandwidths over ``[2(b-a)/N, (b-a)/4]``."""
    a, b = data.domain
    lo, hi = 2 * (b - a) / data.total, (b - a) / 4
    if lo >= hi:
        raise ConfigurationError("too few observations for the default candidate range")
    return np.geomspace(lo, hi, count)


@dataclass
class CvConfig:
    candidate_bandwidths: np.ndarray | None = None
    criterion: str = "LAD"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    max_subjects_evaluated: int | None = None
    approximate: bool = False
    approx_grid_size: int = 201

    def __post_init__(self):
        self.kernel = make_kernel(self.kernel)
        self.criterion = self.criterion.upper()
        if self.criterion not in CRITERIA:
            raise ConfigurationError(f"criterion must be LS or LAD, got {self.criterion!r}")
        if self.candidate_bandwidths is not None:
            c = np.asarray(self.candidate_bandwidths, dtype=float)
            if c.size == 0 or np.any(c <= 0) or np.any(np.diff(c) <= 0):
                raise ConfigurationError("candidate bandwidths must be positive and strictly increasing")
            self.candidate_bandwidths = c


def _held_out_indices(n: int, cap: int | None) -> np.ndarray:
    if cap is None or cap >= n:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, cap)).astype(int))


def cv_terms(data: Dataset, bandwidth: float, criterion: str = "LAD",
             kernel: KernelSpec | str = "epanechnikov", max_subjects: int | None = None,
             approximate: bool = False, approx_grid_size: int = 201) -> tuple[float, int, int]:
    """``(loss_sum, n_scored, n_skipped)`` of the subject-wise cross-validation.

    Each held-out subject is predicted by the jackknife location fit on all
    remaining subjects, evaluated exactly at its own design points (or, with
    ``approximate``, interpolated from a grid fit).
    """
    criterion = criterion.upper()
    if criterion not in CRITERIA:
        raise ConfigurationError(f"criterion must be LS or LAD, got {criterion!r}")
    if data.n_subjects < 2:
        raise CvError("cross-validation needs at least two subjects")
    kernel = make_kernel(kernel)
    h = float(bandwidth)
    xs, ys, sid = data.pooled
    total, scored, skipped = 0.0, 0, 0
    grid = np.linspace(*data.domain, approx_grid_size) if approximate else None
    for i in _held_out_indices(data.n_subjects, max_subjects):
        keep = sid != i
        xo, yo = xs[keep], ys[keep]
        subj = data.subjects[i]
        if approximate:
            rest = Dataset(tuple(s for j, s in enumerate(data.subjects) if j != i), data.domain)
            curve = fit_mu_curve(rest, grid, h, kernel)
            ok = np.isfinite(curve.values)
            if ok.sum() < 2:
                skipped += subj.x.size
                continue
            pred = np.interp(subj.x, curve.grid[ok], curve.values[ok], left=np.nan, right=np.nan)
        else:
            pred = np.empty(subj.x.size)
            for j, x in enumerate(subj.x):
                try:
                    pred[j] = _local_jackknife(xo, yo, x, h, kernel)
                except NoMassError:
                    pred[j] = np.nan
        ok = np.isfinite(pred)
        skipped += int((~ok).sum())
        resid = subj.y[ok] - pred[ok]
        total += float(np.sum(np.abs(resid)) if criterion == "LAD" else np.sum(resid**2))
        scored += int(ok.sum())
    return total, scored, skipped


def cv_score(data: Dataset, bandwidth: float, criterion: str = "LAD",
             kernel: KernelSpec | str = "epanechnikov", **kw) -> float:
    """Mean held-out loss (absolute for LAD, squared for LS) at ``bandwidth``."""
    total, scored, _ = cv_terms(data, bandwidth, criterion, kernel, **kw)
    if scored == 0:
        raise CvError(f"no held-out point had kernel mass at bandwidth {bandwidth}")
    return total / scored


def select_bandwidth(data: Dataset, config: CvConfig | None = None) -> tuple[float, np.ndarray]:
    """Candidate with the smallest CV score (ties go to the smaller bandwidth).

    Returns ``(b_star, table)`` with ``table[:, 0]`` the candidates and
    ``table[:, 1]`` their scores; candidates with no scorable point get ``inf``.
    """
    config = config or CvConfig()
    cands = config.candidate_bandwidths
    if cands is None:
        cands = default_candidates(data)
    a, b = data.domain
    if np.any(cands >= (b - a) / 2):
        raise ConfigurationError("candidate bandwidths must be below half the domain length")
    scores = np.empty(cands.size)
    for k, h in enumerate(cands):
        try:
            scores[k] = cv_score(data, h, config.criterion, config.kernel,
                                 max_subjects=config.max_subjects_evaluated,
                                 approximate=config.approximate,
                                 approx_grid_size=config.approx_grid_size)
        except CvError:
            scores[k] = math.inf
    if not np.isfinite(scores).any():
        raise CvError("no candidate bandwidth produced a score")
    best = int(np.argmin(scores))  # first minimum = smallest bandwidth
    return float(cands[best]), np.column_stack([cands, scores])


def select_scale_bandwidth(data: Dataset, bandwidth_mu: float, config: CvConfig | None = None):
    """Scale bandwidth by the same CV applied to ``|Y_ij - mu_tilde(x_ij)|``.

    ``mu_tilde`` is the full-data jackknife fit at ``bandwidth_mu``, evaluated at
    every design point. Points where it is undefined are dropped.
    """
    config = config or CvConfig()
    xs, ys, _ = data.pooled
    kernel = config.kernel
    subs = []
    for s in data.subjects:
        mu = np.array([_safe_jackknife(xs, ys, x, bandwidth_mu, kernel) for x in s.x])
        ok = np.isfinite(mu)
        if ok.any():
            subs.append(Subject(s.id, s.x[ok], np.abs(s.y[ok] - mu[ok])))
    return select_bandwidth(Dataset(tuple(subs), data.domain), config)


def _safe_jackknife(xs, ys, x, h, kernel):
    try:
        return _local_jackknife(xs, ys, x, h, kernel)
    except NoMassError:
        return np.nan
