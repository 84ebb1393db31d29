"""Monte Carlo replica experiments and fluctuation diagnostics."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .ensembles import EnsembleSpec, SymmetricMatrix, char_exponent, sample_matrix
from .errors import ConfigurationError, DegenerateStatisticError, DomainError
from .spectra import SpectralSample

log = logging.getLogger(__name__)

MIN_KS_SAMPLES = 500


def _lorentz(x):
    return 1.0 / (1.0 + x * x)


def _gauss(x):
    return np.exp(-x * x)


def _sech(x):
    return 1.0 / np.cosh(x)


def _arctan(x):
    return np.arctan(x)


# Bounded test functions available to Function statistics, keyed by id.
FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "lorentz": _lorentz,
    "gauss": _gauss,
    "sech": _sech,
    "arctan": _arctan,
}


class StatisticKind(str, enum.Enum):
    MOMENT = "MomentK"
    RESOLVENT = "Resolvent"
    FUNCTION = "Function"


def _fmt_complex(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}i"


@dataclass(frozen=True)
class Statistic:
    """A linear eigenvalue statistic ``Tr f(A)``.

    ``MomentK`` takes a list of powers, ``Resolvent`` a list of spectral
    parameters, ``Function`` a single id from :data:`FUNCTIONS`.
    """

    kind: StatisticKind
    powers: Tuple[int, ...] = ()
    z: Tuple[complex, ...] = ()
    function: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StatisticKind(self.kind))
        object.__setattr__(self, "powers", tuple(int(k) for k in self.powers))
        object.__setattr__(self, "z", tuple(complex(v) for v in self.z))
        if self.kind is StatisticKind.MOMENT:
            if not self.powers or any(not 1 <= k <= 12 for k in self.powers):
                raise ConfigurationError("moment statistics need powers in [1, 12]")
        elif self.kind is StatisticKind.RESOLVENT:
            if not self.z or any(v.imag == 0 for v in self.z):
                raise ConfigurationError("resolvent statistics need z off the real axis")
        elif self.function not in FUNCTIONS:
            raise ConfigurationError(
                f"unknown function id {self.function!r}; choose from {sorted(FUNCTIONS)}"
            )

    @classmethod
    def moment(cls, *powers: int) -> "Statistic":
        return cls(StatisticKind.MOMENT, powers=powers)

    @classmethod
    def resolvent(cls, *z: complex) -> "Statistic":
        return cls(StatisticKind.RESOLVENT, z=z)

    @classmethod
    def of_function(cls, fid: str) -> "Statistic":
        return cls(StatisticKind.FUNCTION, function=fid)

    @property
    def is_complex(self) -> bool:
        return self.kind is StatisticKind.RESOLVENT

    def labels(self) -> List[str]:
        if self.kind is StatisticKind.MOMENT:
            return [f"tr_A^{k}" for k in self.powers]
        if self.kind is StatisticKind.RESOLVENT:
            return [f"tr_G({_fmt_complex(v)})" for v in self.z]
        return [f"tr_{self.function}(A)"]

    def evaluate(self, sample: SpectralSample) -> np.ndarray:
        if self.kind is StatisticKind.MOMENT:
            return np.array([sample.trace_power(k) for k in self.powers])
        if self.kind is StatisticKind.RESOLVENT:
            return np.array([sample.trace_resolvent(v) for v in self.z])
        return np.array([sample.trace_function(FUNCTIONS[self.function])])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "powers": list(self.powers),
            "z": [[v.real, v.imag] for v in self.z],
            "function": self.function,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Statistic":
        return cls(
            d["kind"],
            powers=tuple(d.get("powers", ())),
            z=tuple(complex(a, b) for a, b in d.get("z", ())),
            function=d.get("function"),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec
    N_list: Tuple[int, ...]
    M: int
    statistic: Statistic
    base_seed: int = 0
    output_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        if self.M < 2:
            raise ConfigurationError("need at least M = 2 replicas")
        if not self.N_list or any(n < 2 for n in self.N_list):
            raise ConfigurationError("every N must be >= 2")

    def to_dict(self) -> dict:
        # output location does not influence the numbers, so it is not hashed
        return {
            "ensemble": self.ensemble.to_dict(),
            "N_list": list(self.N_list),
            "M": self.M,
            "statistic": self.statistic.to_dict(),
            "base_seed": self.base_seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def seeds(self) -> np.ndarray:
        return self.base_seed + np.arange(self.M)


@dataclass(frozen=True)
class ReplicaTable:
    """Raw statistics: ``values[N]`` has shape ``(M, n_labels)``."""

    config: ExperimentConfig
    labels: Tuple[str, ...]
    seeds: np.ndarray
    values: Dict[int, np.ndarray]

    def column(self, N: int, label: Optional[str] = None) -> np.ndarray:
        j = 0 if label is None else self.labels.index(label)
        return self.values[N][:, j]

    def rows(self):
        """Yield ``(N, replica, seed, label, value)`` in a fixed order."""
        for N in self.config.N_list:
            for r, seed in enumerate(self.seeds):
                for j, lab in enumerate(self.labels):
                    yield N, r, int(seed), lab, self.values[N][r, j]


def _one_replica(spec, N, seed, statistic):
    return statistic.evaluate(SpectralSample(sample_matrix(spec, N, int(seed))))


def run_replicas(cfg: ExperimentConfig, threads: int = 1) -> ReplicaTable:
    """Sample ``M`` matrices per ``N`` (seed = base seed + replica index)."""
    stat = cfg.statistic
    dtype = complex if stat.is_complex else float
    seeds = cfg.seeds()
    values = {}
    for N in cfg.N_list:
        def job(seed, N=N):
            return _one_replica(cfg.ensemble, N, seed, stat)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(job, seeds))
        else:
            rows = [job(s) for s in seeds]
        arr = np.array(rows, dtype=dtype)
        arr.setflags(write=False)
        values[N] = arr
        log.info("N=%d: %d replicas done", N, cfg.M)
    return ReplicaTable(cfg, tuple(stat.labels()), seeds, values)


# ---------------------------------------------------------------- diagnostics


def _jackknife_shape_se(x: np.ndarray) -> Tuple[float, float]:
    """Jackknife standard errors of skewness and excess kurtosis."""
    M = x.size
    x = x - x.mean()
    sums = [np.sum(x**k) for k in (1, 2, 3, 4)]
    raw = [(s - x**k) / (M - 1) for k, s in zip((1, 2, 3, 4), sums)]
    mu, r2, r3, r4 = raw
    m2 = r2 - mu**2
    m3 = r3 - 3 * mu * r2 + 2 * mu**3
    m4 = r4 - 4 * mu * r3 + 6 * mu**2 * r2 - 3 * mu**4
    skew = m3 / m2**1.5
    kurt = m4 / m2**2 - 3.0

    def se(v):
        return float(math.sqrt((M - 1) / M * np.sum((v - v.mean()) ** 2)))

    return se(skew), se(kurt)


@dataclass(frozen=True)
class GaussianityReport:
    ks_statistic: float
    p_value: float
    method: str
    skewness: float
    skewness_se: float
    excess_kurtosis: float
    excess_kurtosis_se: float
    M: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def gaussianity_report(
    samples,
    predicted_variance: Optional[float] = None,
    n_bootstrap: int = 500,
    seed: int = 0,
    min_samples: int = MIN_KS_SAMPLES,
) -> GaussianityReport:
    """Normality diagnostics for real samples.

    With ``predicted_variance`` the centred samples are divided by its square
    root and compared with N(0, 1).  Otherwise the variance is fitted and the
    KS p-value comes from a parametric bootstrap (Lilliefors construction).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < min_samples:
        raise ConfigurationError(f"gaussianity diagnostics need at least {min_samples} samples")
    M = x.size
    centred = x - x.mean()
    if predicted_variance is not None:
        if predicted_variance <= 0:
            raise ConfigurationError("predicted variance must be positive")
        res = stats.kstest(centred / math.sqrt(predicted_variance), "norm")
        ks, p, method = float(res.statistic), float(res.pvalue), "standardized-ks"
    else:
        sd = centred.std(ddof=1)
        if sd == 0:
            raise DegenerateStatisticError("samples are constant")
        ks = float(stats.kstest(centred / sd, "norm").statistic)
        rng = np.random.default_rng(seed)
        boot = np.empty(n_bootstrap)
        for b in range(n_bootstrap):
            y = rng.standard_normal(M)
            y = (y - y.mean()) / y.std(ddof=1)
            boot[b] = stats.kstest(y, "norm").statistic
        p = float((1 + np.sum(boot >= ks)) / (1 + n_bootstrap))
        method = "lilliefors-bootstrap"
    skew_se, kurt_se = _jackknife_shape_se(x)
    return GaussianityReport(
        ks,
        p,
        method,
        float(stats.skew(x)),
        skew_se,
        float(stats.kurtosis(x)),
        kurt_se,
        M,
    )


def bootstrap_covariance(x, y=None, n_bootstrap: int = 200, seed: int = 0) -> Tuple[complex, float]:
    """Sample covariance ``mean((x - mean x)(y - mean y))`` and its bootstrap SE.

    No conjugation is applied: for complex data this is the bilinear second
    moment, the quantity a limiting covariance ``C(z, z')`` predicts.  With
    ``y`` omitted it is the (pseudo-)variance of ``x``.
    """
    x = np.asarray(x)
    y = x if y is None else np.asarray(y)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ConfigurationError("covariance needs two equal-length samples of size >= 2")
    M = x.size

    def cov(a, b):
        ca = a - a.mean(axis=-1, keepdims=True)
        cb = b - b.mean(axis=-1, keepdims=True)
        return np.mean(ca * cb, axis=-1)

    value = cov(x, y)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, M, size=(n_bootstrap, M))
    boot = cov(x[idx], y[idx])
    se = float(np.sqrt(np.mean(np.abs(boot - boot.mean()) ** 2)))
    is_complex = np.iscomplexobj(x) or np.iscomplexobj(y)
    return (complex(value) if is_complex else float(value)), se


def bootstrap_variance(x, n_bootstrap: int = 200, seed: int = 0) -> Tuple[complex, float]:
    """:func:`bootstrap_covariance` of a sample with itself."""
    return bootstrap_covariance(x, None, n_bootstrap, seed)


@dataclass(frozen=True)
class StatEntry:
    N: int
    label: str
    mean: complex
    variance: complex
    variance_se: float
    gaussianity: Optional[GaussianityReport]
    gaussianity_imag: Optional[GaussianityReport] = None

    def to_dict(self) -> dict:
        def enc(v):
            return [v.real, v.imag] if isinstance(v, complex) else v

        return {
            "N": self.N,
            "label": self.label,
            "mean": enc(self.mean),
            "variance": enc(self.variance),
            "variance_se": self.variance_se,
            "gaussianity": self.gaussianity.to_dict() if self.gaussianity else None,
            "gaussianity_imag": self.gaussianity_imag.to_dict() if self.gaussianity_imag else None,
        }


@dataclass(frozen=True)
class StatReport:
    """Per-(N, statistic) summaries of ``N**-1/2 (Tr f(A) - mean)``.

    ``covariance[N]`` is the real covariance matrix of the scaled statistics
    with complex columns split into real and imaginary parts, in the order of
    ``covariance_labels``.  Centring uses the sample mean, which biases the
    variance by a relative ``O(1/M)``.
    """

    config_hash: str
    seeds: Tuple[int, int]
    entries: Tuple[StatEntry, ...]
    covariance: Dict[int, np.ndarray]
    covariance_labels: Tuple[str, ...]

    def entry(self, N: int, label: Optional[str] = None) -> StatEntry:
        for e in self.entries:
            if e.N == N and (label is None or e.label == label):
                return e
        raise KeyError((N, label))

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seeds": list(self.seeds),
            "entries": [e.to_dict() for e in self.entries],
            "covariance": {str(N): c.tolist() for N, c in self.covariance.items()},
            "covariance_labels": list(self.covariance_labels),
        }


def _real_columns(values: np.ndarray, labels: Sequence[str], is_complex: bool):
    if not is_complex:
        return values.real, list(labels)
    cols = np.concatenate([values.real, values.imag], axis=1)
    return cols, [f"re_{l}" for l in labels] + [f"im_{l}" for l in labels]


def build_report(
    table: ReplicaTable,
    predicted_variance: Optional[Dict[str, float]] = None,
    n_bootstrap: int = 200,
    gaussianity: bool = True,
) -> StatReport:
    """Summarise a replica table; ``predicted_variance`` is keyed by label."""
    cfg = table.config
    seed = int(cfg.config_hash()[:8], 16)
    entries = []
    covs = {}
    cov_labels: Tuple[str, ...] = ()
    for N in cfg.N_list:
        vals = table.values[N] / math.sqrt(N)
        for j, lab in enumerate(table.labels):
            x = vals[:, j]
            var, se = bootstrap_variance(x, n_bootstrap, seed + j)
            g = gi = None
            if gaussianity and x.size >= MIN_KS_SAMPLES:
                pv = (predicted_variance or {}).get(lab)
                try:
                    g = gaussianity_report(x.real, pv, seed=seed)
                    if np.iscomplexobj(x):
                        gi = gaussianity_report(x.imag, None, seed=seed)
                except DegenerateStatisticError:
                    g = gi = None
            mean = x.mean() * math.sqrt(N)
            entries.append(
                StatEntry(N, lab, complex(mean) if np.iscomplexobj(x) else float(mean), var, se, g, gi)
            )
        cols, cov_labels = _real_columns(vals, table.labels, np.iscomplexobj(vals))
        covs[N] = np.atleast_2d(np.cov(cols, rowvar=False))
    return StatReport(
        cfg.config_hash(),
        (int(table.seeds[0]), int(table.seeds[-1])),
        tuple(entries),
        covs,
        tuple(cov_labels),
    )


@dataclass(frozen=True)
class ScalingFit:
    """``log Var = slope * log N + intercept`` with a bootstrap percentile CI."""

    slope: float
    intercept: float
    ci: Tuple[float, float]
    N_list: Tuple[int, ...]
    variances: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "ci": list(self.ci),
            "N_list": list(self.N_list),
            "variances": list(self.variances),
        }


def _total_variance(x: np.ndarray) -> np.ndarray:
    c = x - x.mean(axis=-1, keepdims=True)
    return np.mean(np.abs(c) ** 2, axis=-1)


def variance_scaling(
    table: ReplicaTable,
    label: Optional[str] = None,
    n_bootstrap: int = 500,
    seed: int = 0,
) -> ScalingFit:
    """Least-squares slope of ``log Var(Tr f(A))`` against ``log N``.

    Complex statistics use ``E|X - EX|**2``.  Needs at least three values of
    N; a span narrower than one decade is accepted with a warning.
    """
    N_list = table.config.N_list
    if len(N_list) < 3:
        raise ConfigurationError("variance scaling needs at least three values of N")
    if max(N_list) < 10 * min(N_list):
        log.warning("N range %s spans less than one decade; slope is poorly constrained", N_list)
    cols = [np.asarray(table.column(N, label)) for N in N_list]
    var = np.array([_total_variance(c) for c in cols])
    if np.any(var <= 0):
        raise DegenerateStatisticError("statistic has zero variance; no fit possible")
    logN = np.log(np.asarray(N_list, dtype=float))
    slope, intercept = np.polyfit(logN, np.log(var), 1)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        v = [_total_variance(c[rng.integers(0, c.size, c.size)]) for c in cols]
        boots[b] = np.polyfit(logN, np.log(np.maximum(v, 1e-300)), 1)[0]
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return ScalingFit(float(slope), float(intercept), (float(lo), float(hi)), tuple(N_list),
                      tuple(float(v) for v in var))


# ------------------------------------------------------------ empirical rho


@dataclass(frozen=True)
class EmpiricalEstimate:
    """Replica means with standard errors (NaN when only one replica)."""

    points: Tuple
    values: np.ndarray
    se: np.ndarray


def _derived_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1)[0])


def _mean_se(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    R = rows.shape[0]
    mean = rows.mean(axis=0)
    if R < 2:
        return mean, np.full(mean.shape, np.nan)
    return mean, np.abs(rows - mean).std(axis=0, ddof=1) / math.sqrt(R)


def empirical_rho(z, t_list, spec: EnsembleSpec, N: int, replicas: int = 1, seed: int = 0) -> EmpiricalEstimate:
    """``(1/N) sum_j Phi(t G(z)_jj)`` averaged over replicas."""
    z = complex(z)
    t = np.asarray(t_list, dtype=float)
    if z.imag == 0 or np.any(t * z.imag < 0):
        raise DomainError("need Im z != 0 and t * Im z >= 0")
    phi = char_exponent(spec)
    rows = []
    for r in range(replicas):
        d = SpectralSample(sample_matrix(spec, N, seed + r)).resolvent_diagonal(z)
        lam = t[:, None] * d[None, :]
        # Im(t G_jj) is <= 0 up to rounding; clip the positive dust
        lam = lam.real + 1j * np.minimum(lam.imag, 0.0)
        rows.append(phi(lam).mean(axis=1))
    mean, se = _mean_se(np.array(rows))
    return EmpiricalEstimate(tuple(t.tolist()), mean, se)


def coupled_pair(spec: EnsembleSpec, N: int, u: float, seed: int):
    """``A`` and a copy ``A'`` sharing the upper-left ``k x k`` block, ``k = round(u N)``.

    All other entries of ``A'`` are drawn independently.
    """
    if not 0 <= u <= 1:
        raise ConfigurationError("u must lie in [0, 1]")
    k = int(round(u * N))
    A = sample_matrix(spec, N, seed)
    B = np.array(sample_matrix(spec, N, _derived_seed(seed, 1)).entries)
    B[:k, :k] = A.entries[:k, :k]
    return A, SymmetricMatrix(B, seed, spec), k


def empirical_rho_pair(
    z, z2, u: float, pairs, spec: EnsembleSpec, N: int, seed: int = 0, replicas: int = 1
) -> EmpiricalEstimate:
    """``(1/N) sum_j Phi(t G(z)_jj + t' G'(z')_jj)`` for the block-coupled pair."""
    z, z2 = complex(z), complex(z2)
    pts = [(float(a), float(b)) for a, b in pairs]
    if z.imag == 0 or z2.imag == 0:
        raise DomainError("spectral parameters must be off the real axis")
    if any(a * z.imag < 0 or b * z2.imag < 0 for a, b in pts):
        raise DomainError("need t * Im z >= 0 and t' * Im z' >= 0")
    phi = char_exponent(spec)
    t = np.array([p[0] for p in pts])[:, None]
    s = np.array([p[1] for p in pts])[:, None]
    rows = []
    for r in range(replicas):
        A, B, _ = coupled_pair(spec, N, u, seed + r)
        d1 = SpectralSample(A).resolvent_diagonal(z)
        d2 = SpectralSample(B).resolvent_diagonal(z2)
        lam = t * d1[None, :] + s * d2[None, :]
        lam = lam.real + 1j * np.minimum(lam.imag, 0.0)
        rows.append(phi(lam).mean(axis=1))
    mean, se = _mean_se(np.array(rows))
    return EmpiricalEstimate(tuple(pts), mean, se)
