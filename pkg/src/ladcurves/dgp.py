"""Synthetic data generation for the location-scale model.

Responses follow ``Y_ij = mu(x_ij) + s(x_ij) e_ij`` where, for every subject,
``{e_ij}_j`` is an independent copy of a stationary process driven by i.i.d.
innovations. Error paths are standardized so that the median of ``e`` is 0 and
the median of ``|e|`` is 1.

Randomness is drawn from :func:`substream`, which derives independent numpy
generators from a master seed and an integer key path, so that subjects and
Monte Carlo replications can be produced in any order with identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .exceptions import ConfigurationError, DataError

__all__ = [
    "substream",
    "DesignSpec",
    "generate_design",
    "design_deviation",
    "ErrorModel",
    "ErrorLaw",
    "error_law",
    "simulate_errors",
    "simulate_coupled_errors",
    "coupling_decay_curve",
    "Subject",
    "Dataset",
    "TrueCurves",
    "default_curves",
    "synthesize_dataset",
    "synthesize_coupled_pair",
]

Z75 = float(stats.norm.ppf(0.75))
CALIBRATION_SEED = 20240607
CALIBRATION_SIZE = 1_000_000
TRUNCATION_TOL = 1e-12
MIN_BURN_IN = 1000
MIN_RESTART = 200


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


# --------------------------------------------------------------------------- design


@dataclass(frozen=True)
class DesignSpec:
    """Approximately equispaced pooled design dealt round-robin to subjects.

    ``visit_order`` controls the measurement index inside a subject, which is
    the index along which its errors are dependent:

    * ``"sorted"`` visits the subject's points left to right;
    * ``"shuffled"`` visits them in a seeded random order;
    * ``"strided"`` splits the sorted points into ``visit_blocks`` contiguous
      blocks and cycles through the blocks, so measurements fewer than
      ``visit_blocks`` steps apart lie in different blocks, roughly
      ``(b-a)/visit_blocks`` apart in ``x``.
    """

    a: float = 0.0
    b: float = 1.0
    subject_sizes: tuple = (10,)
    jitter_scale: float = 0.0
    visit_order: str = "sorted"
    visit_blocks: int = 5

    def __post_init__(self):
        object.__setattr__(self, "subject_sizes", tuple(int(m) for m in self.subject_sizes))
        if not self.subject_sizes:
            raise ConfigurationError("subject_sizes is empty")
        if any(m < 1 for m in self.subject_sizes):
            raise ConfigurationError("every subject needs at least one point")
        if not self.a < self.b:
            raise ConfigurationError(f"need a < b, got [{self.a}, {self.b}]")
        if self.jitter_scale < 0:
            raise ConfigurationError("jitter_scale must be nonnegative")
        if self.visit_order not in ("sorted", "shuffled", "strided"):
            raise ConfigurationError(f"unknown visit_order {self.visit_order!r}")
        if self.visit_blocks < 1:
            raise ConfigurationError("visit_blocks must be positive")

    @classmethod
    def balanced(cls, n: int, m: int, a=0.0, b=1.0, **kw) -> "DesignSpec":
        return cls(a=a, b=b, subject_sizes=(m,) * n, **kw)

    @property
    def total(self) -> int:
        return sum(self.subject_sizes)

    @property
    def n_subjects(self) -> int:
        return len(self.subject_sizes)


def _round_robin(sizes: Sequence[int]) -> list[list[int]]:
    # Deal pooled indices 0..N-1 in turn to subjects that still need points.
    out: list[list[int]] = [[] for _ in sizes]
    remaining = list(sizes)
    k = 0
    total = sum(sizes)
    while k < total:
        for i, r in enumerate(remaining):
            if r > 0 and k < total:
                out[i].append(k)
                remaining[i] -= 1
                k += 1
    return out


def _strided_order(m: int, blocks: int) -> np.ndarray:
    # visit j takes the next unused point of block (j mod blocks)
    chunks = np.array_split(np.arange(m), min(blocks, m))
    order = np.empty(m, dtype=int)
    for chunk, visits in zip(chunks, _round_robin([c.size for c in chunks])):
        order[np.asarray(visits, dtype=int)] = chunk
    return order


def generate_design(spec: DesignSpec, seed: int = 0) -> list[np.ndarray]:
    """Per-subject design points, listed in measurement (visit) order."""
    N = spec.total
    if N < 2:
        raise ConfigurationError("the pooled design needs at least two points")
    width = spec.b - spec.a
    grid = spec.a + width * np.arange(1, N + 1) / (N + 1)
    if spec.jitter_scale > 0:
        rng = substream(seed, 0)
        grid = grid + rng.uniform(-1.0, 1.0, N) * spec.jitter_scale * width / N**2
        grid = np.sort(np.clip(grid, spec.a, spec.b))
    xs = []
    for i, idx in enumerate(_round_robin(spec.subject_sizes)):
        x = grid[np.asarray(idx)]
        if spec.visit_order == "shuffled":
            x = x[substream(seed, 1, i).permutation(x.size)]
        elif spec.visit_order == "strided":
            x = x[_strided_order(x.size, spec.visit_blocks)]
        xs.append(x)
    return xs


def design_deviation(xs, a: float, b: float) -> float:
    """``max_k |x_{k+1} - x_k - (b-a)/N|`` over the pooled sorted design, times ``N^2/(b-a)``.

    Bounded design-density constant; the endpoints ``a`` and ``b`` are included
    as ``x_0`` and ``x_{N+1}``.
    """
    pooled = np.sort(np.concatenate([np.asarray(x, float).ravel() for x in xs]))
    N = pooled.size
    full = np.concatenate([[a], pooled, [b]])
    dev = np.max(np.abs(np.diff(full) - (b - a) / N))
    return float(dev * N**2 / (b - a))


# --------------------------------------------------------------------- error models

_KINDS = (
    "iid",
    "mdependent",
    "noncausal_linear",
    "threshold_ar",
    "arch",
    "random_coefficient",
    "exp_ar",
)
_LINEAR = ("iid", "mdependent", "noncausal_linear")
_INNOVATIONS = ("normal", "student_t", "contaminated_normal")


@dataclass(frozen=True)
class ErrorModel:
    """Stationary error process ``e_j = G(eps_j, eps_{j+-1}, ...)``.

    Linear kinds (``iid``, ``mdependent``, ``noncausal_linear``) are two-sided
    moving averages ``sum_r c_r eps_{j-r}``. The others are causal iterated
    random maps started from zero:

    ``threshold_ar``        e_j = a max(e_{j-1}, 0) + b min(e_{j-1}, 0) + eps_j
    ``arch``                e_j = eps_j (a^2 + b^2 e_{j-1}^2)^{1/2}
    ``random_coefficient``  e_j = (a + b eps_j) e_{j-1} + eps_j
    ``exp_ar``              e_j = [a + b exp(-c e_{j-1}^2)] e_{j-1} + eps_j
    """

    kind: str = "iid"
    m: int = 0
    mixer: tuple = ()
    rho: float = 0.5
    truncation_lag: int | None = None
    a: float = 0.5
    b: float = 0.3
    c: float = 1.0
    innovation: str = "normal"
    df: float = 5.0
    eps: float = 0.1
    scale: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "mixer", tuple(float(v) for v in self.mixer))
        self.validate()

    # factories ------------------------------------------------------------
    @classmethod
    def iid(cls, **kw):
        return cls(kind="iid", **kw)

    @classmethod
    def m_dependent(cls, m: int, mixer=None, **kw):
        if mixer is None:
            mixer = (1.0,) * (2 * m + 1)
        return cls(kind="mdependent", m=m, mixer=tuple(mixer), **kw)

    @classmethod
    def noncausal_linear(cls, rho: float, truncation_lag=None, **kw):
        return cls(kind="noncausal_linear", rho=rho, truncation_lag=truncation_lag, **kw)

    @classmethod
    def threshold_ar(cls, a, b, **kw):
        return cls(kind="threshold_ar", a=a, b=b, **kw)

    @classmethod
    def arch(cls, a, b, **kw):
        return cls(kind="arch", a=a, b=b, **kw)

    @classmethod
    def random_coefficient(cls, a, b, **kw):
        return cls(kind="random_coefficient", a=a, b=b, **kw)

    @classmethod
    def exp_ar(cls, a, b, c, **kw):
        return cls(kind="exp_ar", a=a, b=b, c=c, **kw)

    # checks ---------------------------------------------------------------
    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown error model kind {self.kind!r}")
        if self.innovation not in _INNOVATIONS:
            raise ConfigurationError(f"unknown innovation law {self.innovation!r}")
        if self.innovation == "student_t" and not self.df > 2:
            raise ConfigurationError("student_t innovations need df > 2")
        if self.innovation == "contaminated_normal" and not (0 <= self.eps < 1 and self.scale > 0):
            raise ConfigurationError("contaminated_normal needs 0 <= eps < 1 and scale > 0")
        if self.kind == "mdependent":
            if self.m < 0:
                raise ConfigurationError("m must be nonnegative")
            if len(self.mixer) != 2 * self.m + 1:
                raise ConfigurationError(
                    f"mdependent mixer needs 2m+1 = {2 * self.m + 1} coefficients, got {len(self.mixer)}"
                )
            if not any(self.mixer):
                raise ConfigurationError("mixer coefficients are all zero")
        elif self.kind == "noncausal_linear":
            if not 0 < self.rho < 1:
                raise ConfigurationError("noncausal_linear needs rho in (0, 1)")
        elif self.kind == "threshold_ar":
            if max(abs(self.a), abs(self.b)) >= 1:
                raise ConfigurationError("threshold_ar needs max(|a|, |b|) < 1")
        elif self.kind == "arch":
            if abs(self.b) * self.innovation_sd >= 1:
                raise ConfigurationError("arch needs |b| * sd(eps) < 1")
        elif self.kind == "random_coefficient":
            if self.a**2 + (self.b * self.innovation_sd) ** 2 >= 1:
                raise ConfigurationError("random_coefficient needs a^2 + b^2 var(eps) < 1")
        elif self.kind == "exp_ar":
            if abs(self.a) + abs(self.b) >= 1 or self.c <= 0:
                raise ConfigurationError("exp_ar needs |a| + |b| < 1 and c > 0")

    # structure ------------------------------------------------------------
    @property
    def is_linear(self) -> bool:
        return self.kind in _LINEAR

    @property
    def innovation_sd(self) -> float:
        if self.innovation == "normal":
            return 1.0
        if self.innovation == "student_t":
            return math.sqrt(self.df / (self.df - 2))
        return math.sqrt(1 - self.eps + self.eps * self.scale**2)

    @property
    def half_width(self) -> int:
        """Largest |r| with a nonzero moving-average coefficient (linear kinds)."""
        if self.kind == "iid":
            return 0
        if self.kind == "mdependent":
            return self.m
        if self.kind == "noncausal_linear":
            if self.truncation_lag is not None:
                return int(self.truncation_lag)
            return int(math.floor(math.log(TRUNCATION_TOL) / math.log(self.rho))) + 1
        raise ConfigurationError(f"{self.kind} is not a moving average")

    @property
    def coefficients(self) -> np.ndarray:
        """Moving-average weights ``c_{-L..L}`` for linear kinds."""
        if self.kind == "iid":
            return np.ones(1)
        if self.kind == "mdependent":
            return np.asarray(self.mixer, dtype=float)
        L = self.half_width
        return self.rho ** np.abs(np.arange(-L, L + 1)).astype(float)

    def draw_innovations(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.innovation == "normal":
            return rng.standard_normal(size)
        if self.innovation == "student_t":
            return rng.standard_t(self.df, size)
        z = rng.standard_normal(size)
        hit = rng.random(size) < self.eps
        return np.where(hit, self.scale * z, z)

    def step(self, prev: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """One step of the iterated random map (recursive kinds)."""
        a, b = self.a, self.b
        if self.kind == "threshold_ar":
            return a * np.maximum(prev, 0.0) + b * np.minimum(prev, 0.0) + eps
        if self.kind == "arch":
            return eps * np.sqrt(a * a + b * b * prev * prev)
        if self.kind == "random_coefficient":
            return (a + b * eps) * prev + eps
        if self.kind == "exp_ar":
            return (a + b * np.exp(-self.c * prev * prev)) * prev + eps
        raise ConfigurationError(f"{self.kind} has no recursion")

    @property
    def standardizer(self) -> tuple[float, float]:
        """``(location_shift, scale_divisor)`` making median(e)=0 and median|e|=1."""
        return _standardizer(self)

    # serialization ----------------------------------------------------------
    def to_string(self) -> str:
        parts = [self.kind]
        if self.kind == "mdependent":
            parts.append(f"m={self.m}")
            parts.append("mixer=" + "/".join(repr(v) for v in self.mixer))
        elif self.kind == "noncausal_linear":
            parts.append(f"rho={self.rho!r}")
            if self.truncation_lag is not None:
                parts.append(f"truncation_lag={self.truncation_lag}")
        elif self.kind != "iid":
            parts += [f"a={self.a!r}", f"b={self.b!r}"]
            if self.kind == "exp_ar":
                parts.append(f"c={self.c!r}")
        parts.append(f"innovation={self.innovation}")
        if self.innovation == "student_t":
            parts.append(f"df={self.df!r}")
        elif self.innovation == "contaminated_normal":
            parts += [f"eps={self.eps!r}", f"scale={self.scale!r}"]
        return " ".join(parts)

    @classmethod
    def from_string(cls, text: str) -> "ErrorModel":
        tokens = text.split()
        if not tokens:
            raise ConfigurationError("empty error model description")
        kw: dict = {"kind": tokens[0].lower()}
        for tok in tokens[1:]:
            if "=" not in tok:
                raise ConfigurationError(f"bad error model token {tok!r}")
            key, val = tok.split("=", 1)
            try:
                if key == "mixer":
                    kw[key] = tuple(float(v) for v in val.split("/"))
                elif key in ("m", "truncation_lag"):
                    kw[key] = int(val)
                elif key == "innovation":
                    kw[key] = val
                elif key in ("rho", "a", "b", "c", "df", "eps", "scale"):
                    kw[key] = float(val)
                else:
                    raise ConfigurationError(f"unknown error model field {key!r}")
            except ValueError as exc:
                raise ConfigurationError(f"bad value in {tok!r}: {exc}") from None
        if kw["kind"] == "mdependent" and "mixer" not in kw:
            kw["mixer"] = (1.0,) * (2 * kw.get("m", 0) + 1)
        return cls(**kw)


def _linear_raw(model: ErrorModel, eps: np.ndarray) -> np.ndarray:
    # eps has length n + 2L; output e_j = sum_r c_r eps[j + L - r].
    return np.convolve(eps, model.coefficients, mode="valid")


def _recursive_raw(model: ErrorModel, eps: np.ndarray, burn_in: int) -> np.ndarray:
    # eps: (..., burn_in + n); iterate from zero, drop the burn-in.
    e = np.zeros(eps.shape[:-1])
    out = np.empty(eps.shape[:-1] + (eps.shape[-1] - burn_in,))
    for t in range(eps.shape[-1]):
        e = model.step(e, eps[..., t])
        if t >= burn_in:
            out[..., t - burn_in] = e
    return out


def _raw_path(model: ErrorModel, rng: np.random.Generator, length: int, burn_in: int) -> np.ndarray:
    if model.is_linear:
        L = model.half_width
        return _linear_raw(model, model.draw_innovations(rng, length + 2 * L))
    return _recursive_raw(model, model.draw_innovations(rng, burn_in + length), burn_in)


def _exact_standardizer(model: ErrorModel):
    if model.is_linear and model.innovation == "normal":
        return 0.0, float(np.sqrt(np.sum(model.coefficients**2))) * Z75
    if model.kind == "iid" or (model.kind == "mdependent" and np.count_nonzero(model.mixer) == 1):
        c = float(np.abs(model.coefficients).max())
        if model.innovation == "student_t":
            return 0.0, c * float(stats.t.ppf(0.75, model.df))
        if model.innovation == "contaminated_normal":
            eps_, sc = model.eps, model.scale
            fn = lambda q: (1 - eps_) * (2 * stats.norm.cdf(q) - 1) + eps_ * (2 * stats.norm.cdf(q / sc) - 1) - 0.5  # noqa: E731
            return 0.0, c * float(optimize.brentq(fn, 1e-6, 50 * sc))
    return None


def _calibration_sample(model: ErrorModel) -> np.ndarray:
    rng = substream(CALIBRATION_SEED, 0)
    if model.is_linear:
        return _raw_path(model, rng, CALIBRATION_SIZE, 0)
    chains, per_chain = 1000, CALIBRATION_SIZE // 1000
    eps = model.draw_innovations(rng, (chains, MIN_BURN_IN + per_chain))
    return _recursive_raw(model, eps, MIN_BURN_IN).ravel()


@lru_cache(maxsize=64)
def _standardizer(model: ErrorModel) -> tuple[float, float]:
    exact = _exact_standardizer(model)
    if exact is not None:
        return exact
    raw = _calibration_sample(model)
    loc = float(np.median(raw))
    return loc, float(np.median(np.abs(raw - loc)))


def _standardize(model: ErrorModel, raw: np.ndarray) -> np.ndarray:
    loc, sc = model.standardizer
    return (raw - loc) / sc


def simulate_errors(model: ErrorModel, length: int, burn_in: int = MIN_BURN_IN, seed: int = 0) -> np.ndarray:
    """One standardized stationary path of ``length`` errors."""
    if length < 1:
        raise ConfigurationError("length must be at least 1")
    burn_in = max(int(burn_in), MIN_BURN_IN)
    return _standardize(model, _raw_path(model, substream(seed, 0), length, burn_in))


def _coupled_raw(model: ErrorModel, rng: np.random.Generator, fresh: np.random.Generator,
                 length: int, k: int, burn_in: int) -> tuple[np.ndarray, np.ndarray]:
    if model.is_linear:
        L = model.half_width
        eps = model.draw_innovations(rng, length + 2 * L)
        orig = _linear_raw(model, eps)
        if k >= L:
            return orig, orig.copy()
        c = model.coefficients
        inner = np.zeros_like(c)
        inner[L - k:L + k + 1] = c[L - k:L + k + 1]
        coupled = np.convolve(eps, inner, mode="valid")
        tail = np.concatenate([c[:L - k], c[L + k + 1:]])
        # Independent copies eps'_{j, j-r} for every target index j and |r| > k.
        block = max(1, 2_000_000 // tail.size)
        for lo in range(0, length, block):
            hi = min(length, lo + block)
            coupled[lo:hi] += model.draw_innovations(fresh, (hi - lo, tail.size)) @ tail
        return orig, coupled
    burn_in = max(burn_in, k + 1)
    eps = model.draw_innovations(rng, burn_in + length)
    orig = _recursive_raw(model, eps, burn_in)
    restart = max(5 * k, MIN_RESTART)
    state = np.zeros(length)
    for _ in range(restart):
        state = model.step(state, model.draw_innovations(fresh, length))
    # Replay the shared innovations eps_{j-k..j}.
    idx = burn_in + np.arange(length)
    for lag in range(k, -1, -1):
        state = model.step(state, eps[idx - lag])
    return orig, state


def simulate_coupled_errors(model: ErrorModel, length: int, coupling_lag: int, seed: int = 0,
                            burn_in: int = MIN_BURN_IN) -> tuple[np.ndarray, np.ndarray]:
    """Standardized path and its coupled copy at lag ``coupling_lag``.

    The coupled value at ``j`` keeps the innovations ``eps_{j-k..j+k}`` and
    replaces all others by fresh copies drawn separately for every ``j``, so the
    coupled sequence is exactly ``(2k+1)``-dependent. Exact for the linear kinds;
    for recursive kinds the fresh past is a restarted recursion of
    ``max(5k, 200)`` steps, which is exact up to the geometric contraction.
    """
    if coupling_lag < 0:
        raise ConfigurationError("coupling_lag must be nonnegative")
    if length < 1:
        raise ConfigurationError("length must be at least 1")
    orig, coupled = _coupled_raw(model, substream(seed, 0), substream(seed, 1), length,
                                 int(coupling_lag), max(int(burn_in), MIN_BURN_IN))
    return _standardize(model, orig), _standardize(model, coupled)


def coupling_decay_curve(model: ErrorModel, q: float, lags, mc_size: int, seed: int = 0,
                         transform: Callable | None = None) -> np.ndarray:
    """Monte Carlo ``||h(e_0) - h(e_0(k))||_q`` for each lag ``k``.

    Returns an array of shape ``(len(lags), 2)`` with columns (lag, distance).
    ``transform`` defaults to the identity.
    """
    if not q > 0:
        raise ConfigurationError("q must be positive")
    if mc_size < 1000:
        raise ConfigurationError("mc_size must be at least 1000")
    rows = []
    for i, k in enumerate(lags):
        orig, coupled = simulate_coupled_errors(model, mc_size, int(k), seed=int(seed) * 1000 + i)
        if transform is not None:
            orig, coupled = transform(orig), transform(coupled)
        dist = float(np.mean(np.abs(orig - coupled) ** q) ** (1.0 / q))
        rows.append((float(k), dist))
    return np.asarray(rows)


# ------------------------------------------------------------------ error marginals


@dataclass(frozen=True)
class ErrorLaw:
    """Marginal law of the standardized error: density, its derivative, cdf."""

    pdf: Callable[[float], float]
    dpdf: Callable[[float], float]
    cdf: Callable[[float], float]
    exact: bool = True

    def constants(self) -> dict:
        return {
            "f_e(0)": self.pdf(0.0),
            "f_e'(0)": self.dpdf(0.0),
            "f_e(1)": self.pdf(1.0),
            "f_e(-1)": self.pdf(-1.0),
            "f_e'(1)": self.dpdf(1.0),
            "f_e'(-1)": self.dpdf(-1.0),
            "F_e(-1)": self.cdf(-1.0),
        }


def _normal_law(sd: float) -> ErrorLaw:
    return ErrorLaw(
        pdf=lambda u: float(stats.norm.pdf(u, scale=sd)),
        dpdf=lambda u: float(-u / sd**2 * stats.norm.pdf(u, scale=sd)),
        cdf=lambda u: float(stats.norm.cdf(u, scale=sd)),
    )


@lru_cache(maxsize=32)
def error_law(model: ErrorModel) -> ErrorLaw:
    """Marginal law of ``model``'s standardized errors.

    Closed form for Gaussian moving averages and for i.i.d. Student-t or
    contaminated-normal innovations; otherwise a Gaussian kernel density fit to
    the calibration sample, with the derivative by central differences.
    """
    loc, sc = model.standardizer
    if model.is_linear and model.innovation == "normal":
        return _normal_law(float(np.sqrt(np.sum(model.coefficients**2))) / sc)
    single = model.kind == "iid" or (model.kind == "mdependent" and np.count_nonzero(model.mixer) == 1)
    if single and model.innovation == "student_t":
        c = sc / float(np.abs(model.coefficients).max())
        df = model.df

        def tpdf(u):
            return float(c * stats.t.pdf(c * u, df))

        return ErrorLaw(
            pdf=tpdf,
            dpdf=lambda u: float(-(df + 1) * c * c * u / (df + (c * u) ** 2) * tpdf(u)),
            cdf=lambda u: float(stats.t.cdf(c * u, df)),
        )
    if single and model.innovation == "contaminated_normal":
        c = sc / float(np.abs(model.coefficients).max())
        p, s2 = model.eps, model.scale
        comps = ((1 - p, 1.0 / c), (p, s2 / c))
        return ErrorLaw(
            pdf=lambda u: float(sum(w * stats.norm.pdf(u, scale=s) for w, s in comps)),
            dpdf=lambda u: float(sum(-w * u / s**2 * stats.norm.pdf(u, scale=s) for w, s in comps)),
            cdf=lambda u: float(sum(w * stats.norm.cdf(u, scale=s) for w, s in comps)),
        )
    sample = (_calibration_sample(model) - loc) / sc
    kde = stats.gaussian_kde(sample)
    h = 1e-3

    def kpdf(u):
        return float(kde.evaluate([u])[0])

    return ErrorLaw(
        pdf=kpdf,
        dpdf=lambda u: (kpdf(u + h) - kpdf(u - h)) / (2 * h),
        cdf=lambda u: float(kde.integrate_box_1d(-np.inf, u)),
        exact=False,
    )


# ------------------------------------------------------------------------ datasets


@dataclass(frozen=True, eq=False)
class Subject:
    id: str
    x: np.ndarray
    y: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Subject):
            return NotImplemented
        return (self.id == other.id and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Multi-subject ``(x, y)`` data on ``domain = (a, b)``; x sorted within subject."""

    subjects: tuple
    domain: tuple

    def __post_init__(self):
        subs = []
        a, b = (float(v) for v in self.domain)
        if not a <= b:
            raise DataError(f"bad domain {self.domain}")
        for s in self.subjects:
            x = np.asarray(s.x, dtype=float).ravel()
            y = np.asarray(s.y, dtype=float).ravel()
            if x.size != y.size or x.size == 0:
                raise DataError(f"subject {s.id!r}: x and y must have equal nonzero length")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise DataError(f"subject {s.id!r}: non-finite values")
            if x.min() < a or x.max() > b:
                raise DataError(f"subject {s.id!r}: x outside [{a}, {b}]")
            order = np.argsort(x, kind="stable")
            subs.append(Subject(str(s.id), x[order], y[order]))
        if not subs:
            raise DataError("dataset has no subjects")
        object.__setattr__(self, "subjects", tuple(subs))
        object.__setattr__(self, "domain", (a, b))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.domain == other.domain and self.subjects == other.subjects

    @classmethod
    def from_arrays(cls, xs, ys, domain=None, ids=None) -> "Dataset":
        xs = [np.asarray(x, float) for x in xs]
        if domain is None:
            allx = np.concatenate(xs)
            domain = (float(allx.min()), float(allx.max()))
        ids = ids if ids is not None else [str(i + 1) for i in range(len(xs))]
        return cls(tuple(Subject(i, x, y) for i, x, y in zip(ids, xs, ys)), domain)

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def total(self) -> int:
        return int(sum(s.x.size for s in self.subjects))

    @cached_property
    def pooled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(x, y, subject_index)`` over all subjects, sorted by x (stable)."""
        x = np.concatenate([s.x for s in self.subjects])
        y = np.concatenate([s.y for s in self.subjects])
        sid = np.concatenate([np.full(s.x.size, i) for i, s in enumerate(self.subjects)])
        order = np.argsort(x, kind="stable")
        return x[order], y[order], sid[order]

    def without(self, index: int) -> "Dataset":
        subs = tuple(s for i, s in enumerate(self.subjects) if i != index)
        return Dataset(subs, self.domain)

    def map_y(self, fn, which=None) -> "Dataset":
        """New dataset with ``fn(x, y)`` applied to subjects in ``which`` (all by default)."""
        which = set(range(self.n_subjects)) if which is None else set(which)
        subs = tuple(
            Subject(s.id, s.x, fn(s.x, s.y) if i in which else s.y)
            for i, s in enumerate(self.subjects)
        )
        return Dataset(subs, self.domain)


@dataclass(frozen=True)
class TrueCurves:
    """Location and scale curves with first and second derivatives."""

    mu: Callable
    dmu: Callable
    d2mu: Callable
    s: Callable
    ds: Callable
    d2s: Callable
    domain: tuple = (0.0, 1.0)
    name: str = "custom"

    @classmethod
    def constant(cls, mu0=0.0, s0=1.0, domain=(0.0, 1.0)):
        zero = lambda x: 0.0 * np.asarray(x, float)  # noqa: E731
        return cls(
            mu=lambda x: mu0 + zero(x), dmu=zero, d2mu=zero,
            s=lambda x: s0 + zero(x), ds=zero, d2s=zero, domain=domain, name="constant",
        )

    @classmethod
    def linear(cls, slope=1.0, intercept=0.0, s0=1.0, domain=(0.0, 1.0)):
        zero = lambda x: 0.0 * np.asarray(x, float)  # noqa: E731
        return cls(
            mu=lambda x: intercept + slope * np.asarray(x, float),
            dmu=lambda x: slope + zero(x), d2mu=zero,
            s=lambda x: s0 + zero(x), ds=zero, d2s=zero, domain=domain, name="linear",
        )


def default_curves() -> TrueCurves:
    """mu(x) = sin(2 pi x), s(x) = 0.5 + 0.25 x on [0, 1]."""
    tau = 2 * np.pi
    return TrueCurves(
        mu=lambda x: np.sin(tau * np.asarray(x, float)),
        dmu=lambda x: tau * np.cos(tau * np.asarray(x, float)),
        d2mu=lambda x: -tau * tau * np.sin(tau * np.asarray(x, float)),
        s=lambda x: 0.5 + 0.25 * np.asarray(x, float),
        ds=lambda x: 0.25 + 0.0 * np.asarray(x, float),
        d2s=lambda x: 0.0 * np.asarray(x, float),
        domain=(0.0, 1.0),
        name="sine",
    )


def _resolve_design(design, seed) -> tuple[list[np.ndarray], tuple]:
    if isinstance(design, DesignSpec):
        return generate_design(design, seed), (design.a, design.b)
    xs = [np.asarray(x, float) for x in design]
    allx = np.concatenate(xs)
    return xs, (float(allx.min()), float(allx.max()))


def _error_paths(model: ErrorModel, sizes, seed: int) -> list[np.ndarray]:
    rngs = [substream(seed, i) for i in range(len(sizes))]
    if model.is_linear:
        return [_standardize(model, _raw_path(model, r, m, 0)) for r, m in zip(rngs, sizes)]
    # Run all subjects' recursions side by side; each uses its own substream.
    longest = max(sizes)
    eps = np.zeros((len(sizes), MIN_BURN_IN + longest))
    for i, (r, m) in enumerate(zip(rngs, sizes)):
        eps[i, :MIN_BURN_IN + m] = model.draw_innovations(r, MIN_BURN_IN + m)
    raw = _recursive_raw(model, eps, MIN_BURN_IN)
    return [_standardize(model, raw[i, :m]) for i, m in enumerate(sizes)]


def _compose(xs, errs, curves: TrueCurves, domain) -> Dataset:
    ys = [curves.mu(x) + curves.s(x) * e for x, e in zip(xs, errs)]
    return Dataset.from_arrays(xs, ys, domain=domain)


def synthesize_dataset(design, curves: TrueCurves, model: ErrorModel, seed: int,
                       domain=None) -> Dataset:
    """Draw ``Y_ij = mu(x_ij) + s(x_ij) e_ij`` with an independent error path per subject.

    ``design`` is a :class:`DesignSpec` (generated with ``seed``) or a list of
    per-subject x arrays in measurement order, which keeps the design fixed
    across Monte Carlo replications.
    """
    xs, dom = _resolve_design(design, seed)
    errs = _error_paths(model, [x.size for x in xs], seed)
    return _compose(xs, errs, curves, domain or dom)


def synthesize_coupled_pair(design, curves: TrueCurves, model: ErrorModel, coupling_lag: int,
                            seed: int, domain=None) -> tuple[Dataset, Dataset]:
    """Dataset and its coupled twin on the same design (errors replaced by ``e_ij(k)``)."""
    xs, dom = _resolve_design(design, seed)
    orig, coup = [], []
    for i, x in enumerate(xs):
        o, c = simulate_coupled_errors(model, x.size, coupling_lag, seed=substream(seed, i).integers(2**63))
        orig.append(o)
        coup.append(c)
    dom = domain or dom
    return _compose(xs, orig, curves, dom), _compose(xs, coup, curves, dom)
