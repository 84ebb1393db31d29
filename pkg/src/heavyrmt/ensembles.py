"""Heavy-tailed symmetric random matrix ensembles and their characteristic exponents.

Four families are supported:

* ``Levy``: symmetric unit-Pareto entries, ``P(|x| >= u) = u**-alpha`` for
  ``u >= 1``, divided by ``a_N = N**(1/alpha)``.
* ``ExplodingMoments``: entries whose even moments satisfy
  ``N E[a**(2k)] -> C_k = int x**(k-1) dm(x)`` for a discrete measure ``m``.
* ``ErdosRenyi``: Bernoulli(p/N) adjacency entries, optionally recentred.
  This is the exploding-moments family with ``m = p delta_1``.
* ``StandardWigner``: Rademacher or Gaussian entries divided by ``sqrt(N)``.

Every family is described by an :class:`EnsembleSpec`.  The limiting
characteristic exponent ``Phi(lam) = lim N (E[exp(-i lam a**2)] - 1)`` is
available through :func:`phi_limit` and can be checked against Monte Carlo
with :func:`empirical_phi`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from .combinatorics import CSequence
from .errors import CapacityError, ConfigurationError, DomainError

# Three N x N float64 work arrays must fit in this budget.
MEMORY_BUDGET_BYTES = 3 * 2**30


class Family(str, enum.Enum):
    LEVY = "Levy"
    EXPLODING = "ExplodingMoments"
    ERDOS_RENYI = "ErdosRenyi"
    WIGNER = "StandardWigner"


class EntryLaw(str, enum.Enum):
    RADEMACHER = "Rademacher"
    GAUSSIAN = "Gaussian"


class DiagonalPolicy(str, enum.Enum):
    SAME_LAW = "SameLaw"
    ZERO = "Zero"


def _enum(cls, value):
    if isinstance(value, cls):
        return value
    for member in cls:
        if str(value).lower() in (member.value.lower(), member.name.lower()):
            return member
    raise ConfigurationError(f"unknown {cls.__name__} {value!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    """Which matrix family to sample and with which parameters.

    ``moment_measure`` is a tuple of ``(atom, weight)`` pairs and is only
    meaningful for ``ExplodingMoments``.
    """

    family: Family
    alpha: Optional[float] = None
    p: Optional[float] = None
    moment_measure: Tuple[Tuple[float, float], ...] = ()
    entry_law: EntryLaw = EntryLaw.RADEMACHER
    recenter: bool = True
    diagonal_policy: DiagonalPolicy = DiagonalPolicy.SAME_LAW

    def __post_init__(self):
        object.__setattr__(self, "family", _enum(Family, self.family))
        object.__setattr__(self, "entry_law", _enum(EntryLaw, self.entry_law))
        object.__setattr__(
            self, "diagonal_policy", _enum(DiagonalPolicy, self.diagonal_policy)
        )
        measure = tuple((float(x), float(w)) for x, w in self.moment_measure)
        object.__setattr__(self, "moment_measure", measure)

        if self.family is Family.LEVY:
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise ConfigurationError("Levy family needs alpha in (0, 2)")
        elif self.family is Family.ERDOS_RENYI:
            if self.p is None or not self.p > 0:
                raise ConfigurationError("ErdosRenyi family needs p > 0")
        elif self.family is Family.EXPLODING:
            if not measure:
                raise ConfigurationError("ExplodingMoments needs a moment measure")
            for x, w in measure:
                if x < 0 or not w > 0 or not math.isfinite(x):
                    raise ConfigurationError(
                        f"moment measure atoms must be >= 0 with weights > 0, got ({x}, {w})"
                    )

    # convenience constructors
    @classmethod
    def levy(cls, alpha, **kw):
        return cls(Family.LEVY, alpha=float(alpha), **kw)

    @classmethod
    def erdos_renyi(cls, p, **kw):
        return cls(Family.ERDOS_RENYI, p=float(p), **kw)

    @classmethod
    def exploding(cls, measure, **kw):
        return cls(Family.EXPLODING, moment_measure=tuple(measure), **kw)

    @classmethod
    def wigner(cls, entry_law=EntryLaw.RADEMACHER, **kw):
        return cls(Family.WIGNER, entry_law=entry_law, **kw)

    @property
    def sigma(self) -> float:
        """Scale in ``Phi(lam) = -sigma (i lam)**(alpha/2)`` for unit-Pareto tails."""
        if self.family is not Family.LEVY:
            raise ConfigurationError("sigma is defined for the Levy family only")
        return float(gamma_fn(1.0 - self.alpha / 2.0))

    def measure(self) -> Optional[Tuple[Tuple[float, float], ...]]:
        """The measure ``m`` with ``C_(k+1) = int x**k dm``, or None for Levy."""
        if self.family is Family.EXPLODING:
            return self.moment_measure
        if self.family is Family.ERDOS_RENYI:
            return ((1.0, self.p),)
        if self.family is Family.WIGNER:
            return ((0.0, 1.0),)
        return None

    def c_sequence(self, kmax: int = 12) -> CSequence:
        measure = self.measure()
        if measure is None:
            raise ConfigurationError("Levy matrices have no finite moment sequence")
        return CSequence.from_measure(measure, kmax)

    def to_dict(self) -> dict:
        out = {
            "family": self.family.value,
            "recenter": self.recenter,
            "diagonal_policy": self.diagonal_policy.value,
        }
        if self.family is Family.LEVY:
            out["alpha"] = self.alpha
        elif self.family is Family.ERDOS_RENYI:
            out["p"] = self.p
        elif self.family is Family.EXPLODING:
            out["moment_measure"] = [list(a) for a in self.moment_measure]
        else:
            out["entry_law"] = self.entry_law.value
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        d = dict(d)
        if "moment_measure" in d:
            d["moment_measure"] = tuple(tuple(a) for a in d["moment_measure"])
        return cls(**d)


@dataclass(frozen=True)
class SymmetricMatrix:
    """A sampled real symmetric matrix together with its provenance."""

    entries: np.ndarray = field(repr=False)
    seed: int
    spec: Optional[EnsembleSpec] = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigurationError("entries must be a square matrix")
        if not np.array_equal(a, a.T):
            raise ConfigurationError("entries must be exactly symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_lower(cls, lower, seed=0, spec=None):
        """Build from a lower-triangular array (upper part ignored)."""
        lower = np.tril(np.asarray(lower, dtype=float))
        return cls(lower + np.tril(lower, -1).T, seed, spec)


def _exploding_parts(spec: EnsembleSpec, N: int):
    jumps = [(x, w / (N * x)) for x, w in spec.measure() if x > 0]
    gauss_var = sum(w for x, w in spec.measure() if x == 0) / N
    total = sum(q for _, q in jumps)
    if total > 1.0:
        raise ConfigurationError(
            f"N={N} too small for this moment measure: jump probabilities sum to {total:.3g} > 1"
        )
    return jumps, gauss_var


def _draw_entries(spec: EnsembleSpec, N: int, rng: np.random.Generator, shape):
    """Draw i.i.d. copies of the single-entry law ``a`` (already normalised)."""
    fam = spec.family
    if fam is Family.LEVY:
        u = 1.0 - rng.random(shape)  # in (0, 1]
        sign = rng.integers(0, 2, shape) * 2.0 - 1.0
        return sign * u ** (-1.0 / spec.alpha) / N ** (1.0 / spec.alpha)
    if fam is Family.ERDOS_RENYI:
        q = spec.p / N
        if q > 1.0:
            raise ConfigurationError(f"edge probability p/N = {q:.3g} exceeds 1")
        a = (rng.random(shape) < q).astype(float)
        if spec.recenter:
            a -= q
        return a
    if fam is Family.WIGNER:
        if spec.entry_law is EntryLaw.GAUSSIAN:
            return rng.standard_normal(shape) / math.sqrt(N)
        return (rng.integers(0, 2, shape) * 2.0 - 1.0) / math.sqrt(N)
    # exploding moments: symmetric jumps +-sqrt(x_i), mean zero by construction
    jumps, gauss_var = _exploding_parts(spec, N)
    a = np.zeros(shape)
    if jumps:
        u = rng.random(shape)
        sign = rng.integers(0, 2, shape) * 2.0 - 1.0
        lo = 0.0
        for x, q in jumps:
            hit = (u >= lo) & (u < lo + q)
            a[hit] = math.sqrt(x)
            lo += q
        a *= sign
    if gauss_var > 0:
        a += rng.standard_normal(shape) * math.sqrt(gauss_var)
    return a


def sample_matrix(spec: EnsembleSpec, N: int, seed: int) -> SymmetricMatrix:
    """Sample one symmetric matrix; a pure function of ``(spec, N, seed)``."""
    if int(N) != N or N < 2:
        raise ConfigurationError(f"N must be an integer >= 2, got {N}")
    N = int(N)
    if 3 * 8 * N * N > MEMORY_BUDGET_BYTES:
        raise CapacityError(f"N={N} exceeds the dense-matrix memory budget")
    rng = np.random.default_rng(int(seed))
    x = _draw_entries(spec, N, rng, (N, N))
    lower = np.tril(x, -1)
    a = lower + lower.T
    if spec.diagonal_policy is DiagonalPolicy.SAME_LAW:
        a[np.diag_indices(N)] = np.diag(x)
    return SymmetricMatrix(a, int(seed), spec)


@dataclass(frozen=True)
class CharExponent:
    """Callable ``Phi`` on the closed lower half-plane."""

    family: Family
    spec: EnsembleSpec

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        if np.any(lam.imag > 0):
            raise DomainError("Phi is defined for Im(lambda) <= 0 only")
        spec = self.spec
        if self.family is Family.LEVY:
            out = -spec.sigma * np.power(1j * lam, spec.alpha / 2.0)
        elif self.family is Family.WIGNER:
            out = -1j * lam
        elif self.family is Family.ERDOS_RENYI:
            out = spec.p * np.expm1(-1j * lam)
        else:
            out = np.zeros_like(lam)
            for x, w in spec.measure():
                if x == 0:
                    out = out - 1j * lam * w
                else:
                    out = out + w * np.expm1(-1j * lam * x) / x
        return out[()] if out.ndim == 0 else out


def char_exponent(spec: EnsembleSpec) -> CharExponent:
    return CharExponent(spec.family, spec)


def phi_limit(spec: EnsembleSpec, lam):
    """Limiting characteristic exponent ``Phi(lam)``; ``Im lam <= 0`` required."""
    return char_exponent(spec)(lam)


@dataclass(frozen=True)
class PhiEstimate:
    value: complex
    se_real: float
    se_imag: float

    @property
    def se(self) -> float:
        return math.hypot(self.se_real, self.se_imag)


def empirical_phi(spec: EnsembleSpec, N: int, lam: complex, M: int, seed: int) -> PhiEstimate:
    """Monte Carlo estimate of ``N (E[exp(-i lam a**2)] - 1)`` with jackknife errors."""
    lam = complex(lam)
    if lam.imag > 0:
        raise DomainError("Im(lambda) must be <= 0")
    if M < 100:
        raise ConfigurationError("empirical_phi needs M >= 100 draws")
    rng = np.random.default_rng(int(seed))
    a = _draw_entries(spec, int(N), rng, (int(M),))
    # expm1 keeps precision for the many tiny entries
    y = np.expm1(-1j * lam * a * a)
    total = y.sum()
    loo = N * (total - y) / (M - 1)
    centred = loo - loo.mean()
    scale = (M - 1) / M
    se_re = math.sqrt(scale * np.sum(centred.real**2))
    se_im = math.sqrt(scale * np.sum(centred.imag**2))
    return PhiEstimate(complex(N * total / M), se_re, se_im)


def finite_n_even_moment(spec: EnsembleSpec, N: int, k: int) -> float:
    """Exact ``N E[a**(2k)]`` for the finite-N exploding-moment families."""
    fam = spec.family
    if fam is Family.ERDOS_RENYI:
        q = spec.p / N
        lo, hi = (-q, 1.0 - q) if spec.recenter else (0.0, 1.0)
        return N * (q * hi ** (2 * k) + (1 - q) * lo ** (2 * k))
    if fam is Family.WIGNER:
        if spec.entry_law is EntryLaw.RADEMACHER:
            return N * N ** (-k)
        return N * _double_factorial(2 * k - 1) * N ** (-k)
    if fam is Family.EXPLODING:
        jumps, gvar = _exploding_parts(spec, N)
        total = 0.0
        for j in range(k + 1):
            jump_m = 1.0 if j == 0 else sum(q * x**j for x, q in jumps)
            g_m = _double_factorial(2 * (k - j) - 1) * gvar ** (k - j)
            total += math.comb(2 * k, 2 * j) * jump_m * g_m
        return N * total
    raise ConfigurationError("Levy entries have no finite even moments beyond alpha")


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def parse_measure(items: Sequence) -> Tuple[Tuple[float, float], ...]:
    """Accept ``[(x, w), ...]`` or ``"x:w, x:w"``."""
    if isinstance(items, str):
        pairs = []
        for chunk in items.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            x, _, w = chunk.partition(":")
            if not w:
                raise ConfigurationError(f"bad measure atom {chunk!r}, expected x:w")
            pairs.append((float(x), float(w)))
        return tuple(pairs)
    return tuple((float(x), float(w)) for x, w in items)
