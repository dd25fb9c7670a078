"""Bounded-support smoothing kernels and their moment constants.

Three symmetric kernels on [-1, 1] are provided. Epanechnikov is the default.
The uniform kernel has a jump at +-1 and so lacks a bounded derivative; it is
kept for testing and should not be used for inference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .exceptions import ConfigurationError

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "make_kernel",
    "eval_kernel",
    "eval_jackknife_kernel",
    "kernel_moments",
    "kernel_integral",
]

SQRT2 = math.sqrt(2.0)
FAMILIES = ("epanechnikov", "triweight", "uniform")
_QUAD_TOL = 1e-12


def _epanechnikov(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _triweight(u):
    return np.where(np.abs(u) <= 1.0, (35.0 / 32.0) * (1.0 - u * u) ** 3, 0.0)


def _uniform(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


_PROFILES = {
    "epanechnikov": _epanechnikov,
    "triweight": _triweight,
    "uniform": _uniform,
}


def _normalize_family(family: str) -> str:
    name = str(family).strip().lower()
    if name not in _PROFILES:
        raise ConfigurationError(
            f"unknown kernel family {family!r}; expected one of {', '.join(FAMILIES)}"
        )
    return name


def _quad(fn, lo, hi, points=None) -> float:
    val, _ = integrate.quad(
        fn, lo, hi, points=points, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200
    )
    return float(val)


@lru_cache(maxsize=None)
def kernel_moments(family: str) -> tuple[float, float, float]:
    """Return ``(phi_K, psi_K, phi_Kstar)`` for a kernel family.

    ``phi_K = int K^2``, ``psi_K = 0.5 * int u^2 K`` and
    ``phi_Kstar = int (K*)^2`` with ``K*(u) = 2K(u) - K(u/sqrt2)/sqrt2``.
    All three are computed by adaptive quadrature.
    """
    prof = _PROFILES[_normalize_family(family)]
    k = lambda u: float(prof(u))  # noqa: E731
    kstar = lambda u: 2.0 * k(u) - k(u / SQRT2) / SQRT2  # noqa: E731
    phi = _quad(lambda u: k(u) ** 2, -1.0, 1.0, points=[0.0])
    psi = 0.5 * _quad(lambda u: u * u * k(u), -1.0, 1.0, points=[0.0])
    phistar = _quad(lambda u: kstar(u) ** 2, -SQRT2, SQRT2, points=[-1.0, 0.0, 1.0])
    return phi, psi, phistar


@dataclass(frozen=True)
class KernelSpec:
    """Immutable kernel description with precomputed moment constants."""

    family: str = "epanechnikov"
    support_halfwidth: float = field(default=1.0, init=False)
    phi_K: float = field(default=0.0, init=False)
    psi_K: float = field(default=0.0, init=False)
    phi_Kstar: float = field(default=0.0, init=False)

    def __post_init__(self):
        name = _normalize_family(self.family)
        phi, psi, phistar = kernel_moments(name)
        object.__setattr__(self, "family", name)
        object.__setattr__(self, "phi_K", phi)
        object.__setattr__(self, "psi_K", psi)
        object.__setattr__(self, "phi_Kstar", phistar)

    @property
    def conforming(self) -> bool:
        """False for kernels without a bounded derivative on the real line."""
        return self.family != "uniform"

    def __call__(self, u):
        return _PROFILES[self.family](np.asarray(u, dtype=float))

    def jackknife(self, u):
        u = np.asarray(u, dtype=float)
        return 2.0 * self(u) - self(u / SQRT2) / SQRT2


def make_kernel(family: str | KernelSpec = "epanechnikov") -> KernelSpec:
    if isinstance(family, KernelSpec):
        return family
    return KernelSpec(family)


def eval_kernel(spec: KernelSpec, u):
    """K(u); exactly zero outside [-1, 1]. Scalars in, scalars out."""
    out = spec(u)
    return float(out) if np.ndim(out) == 0 else out


def eval_jackknife_kernel(spec: KernelSpec, u):
    """K*(u) = 2K(u) - 2^{-1/2} K(u/sqrt2), supported on [-sqrt2, sqrt2]."""
    out = spec.jackknife(u)
    return float(out) if np.ndim(out) == 0 else out


def kernel_integral(spec: KernelSpec, fn, jackknife: bool = False) -> float:
    """Integrate ``fn(u) * K(u)`` (or ``K*``) over the kernel support."""
    if jackknife:
        return _quad(lambda u: fn(u) * float(spec.jackknife(u)), -SQRT2, SQRT2,
                     points=[-1.0, 0.0, 1.0])
    return _quad(lambda u: fn(u) * float(spec(u)), -1.0, 1.0, points=[0.0])
