"""Integral kernels behind the characteristic exponent.

``Phi(lam) = int_0^inf g(y) exp(i y / lam) dy`` on the lower half-plane, and
for exploding-moment ensembles the two-variable decomposition

    Phi(x + y) = iint exp(i v/x + i v'/y) tau(v, v') dv dv'
                 + int exp(i v/x) mu(v) dv + int exp(i v'/y) mu(v') dv'

with ``tau(v, v') = sum_i w_i h_i(v) h_i(v')``, ``h_i(v) = J1(2 sqrt(x_i v)) / sqrt(v)``
and ``mu = g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import j1

from ..ensembles import EnsembleSpec, Family
from ..errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class KernelSpec:
    """Kernel parameters: ``levy`` (alpha, sigma) or ``exploding`` (measure m)."""

    family: str
    alpha: Optional[float] = None
    sigma: Optional[float] = None
    measure: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.family == "levy":
            if self.alpha is None or not 0 < self.alpha < 2:
                raise ConfigurationError("levy kernel needs alpha in (0, 2)")
            if self.sigma is None:
                object.__setattr__(self, "sigma", float(gamma_fn(1 - self.alpha / 2)))
        elif self.family == "exploding":
            if not self.measure:
                raise ConfigurationError("exploding kernel needs a moment measure")
            for x, w in self.measure:
                if x < 0 or w <= 0:
                    raise ConfigurationError("measure atoms must be >= 0 with positive weight")
        else:
            raise ConfigurationError(f"unknown kernel family {self.family!r}")

    @classmethod
    def from_ensemble(cls, spec: EnsembleSpec) -> "KernelSpec":
        if spec.family is Family.LEVY:
            return cls("levy", alpha=spec.alpha, sigma=spec.sigma)
        return cls("exploding", measure=spec.measure())

    @classmethod
    def semicircle(cls) -> "KernelSpec":
        return cls("exploding", measure=((0.0, 1.0),))

    @property
    def singular_exponent(self) -> float:
        """Exponent ``gamma`` in ``g(y) ~ y**gamma`` as ``y -> 0``."""
        return self.alpha / 2 - 1 if self.family == "levy" else 0.0

    @property
    def levy_constant(self) -> complex:
        # int_0^inf y**(a-1) exp(-s y) dy = Gamma(a) s**-a with s = -i/lam
        return -self.sigma / math.gamma(self.alpha / 2)

    def phi(self, lam):
        lam = np.asarray(lam, dtype=complex)
        if self.family == "levy":
            return -self.sigma * np.power(1j * lam, self.alpha / 2)
        out = np.zeros_like(lam)
        for x, w in self.measure:
            out = out + (-1j * lam * w if x == 0 else w * np.expm1(-1j * lam * x) / x)
        return out


def as_kernel(spec) -> KernelSpec:
    if isinstance(spec, KernelSpec):
        return spec
    if isinstance(spec, EnsembleSpec):
        return KernelSpec.from_ensemble(spec)
    raise ConfigurationError(f"cannot build a kernel from {spec!r}")


def bessel_ratio(s):
    """``J1(s) / (s/2)``, equal to 1 at ``s = 0``."""
    s = np.asarray(s, dtype=float)
    out = np.ones_like(s)
    big = s > 1e-4
    out[big] = 2.0 * j1(s[big]) / s[big]
    small = ~big
    # two series terms are exact to double precision below 1e-4
    out[small] = 1.0 - s[small] ** 2 / 8.0
    return out


def kernel_g(spec, y):
    """``g(y)`` with ``Phi(lam) = int_0^inf g(y) exp(i y/lam) dy``; ``y > 0``."""
    k = as_kernel(spec)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("g is evaluated at y > 0 only")
    return _g_unchecked(k, y)


def _g_unchecked(k: KernelSpec, y: np.ndarray) -> np.ndarray:
    if k.family == "levy":
        return k.levy_constant * np.power(y, k.alpha / 2 - 1) + 0j
    out = np.zeros(y.shape, dtype=complex)
    for x, w in k.measure:
        out -= w * bessel_ratio(2.0 * np.sqrt(x * y))
    return out


@dataclass(frozen=True)
class PairMeasureSpec:
    """The measures ``tau`` (two-variable density) and ``mu`` for a kernel."""

    kernel: KernelSpec

    def __post_init__(self):
        if self.kernel.family != "exploding":
            raise ConfigurationError("closed-form tau/mu exist for exploding moments only")

    def tau_factors(self, v) -> List[Tuple[float, np.ndarray]]:
        """Rank-one terms ``(w_i, h_i(v))`` of ``tau``; zero atoms drop out."""
        v = np.asarray(v, dtype=float)
        return [
            (w, math.sqrt(x) * bessel_ratio(2.0 * np.sqrt(x * v)))
            for x, w in self.kernel.measure
            if x > 0
        ]

    def tau(self, v, v2):
        v, v2 = np.broadcast_arrays(np.asarray(v, float), np.asarray(v2, float))
        out = np.zeros(v.shape)
        for (w, hv), (_, hv2) in zip(self.tau_factors(v), self.tau_factors(v2)):
            out += w * hv * hv2
        return out

    def mu(self, v):
        return _g_unchecked(self.kernel, np.asarray(v, dtype=float))
