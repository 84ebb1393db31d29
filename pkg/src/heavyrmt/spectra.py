"""Linear eigenvalue statistics of a sampled symmetric matrix."""

from __future__ import annotations

import enum
import itertools
import math
from functools import lru_cache
from typing import Callable, Dict, Sequence

import numpy as np

from .combinatorics import MultiGraph
from .ensembles import SymmetricMatrix
from .errors import CapacityError, ConfigurationError, DomainError

MAX_POWER = 12
MAX_INJECTIVE_N = 8
MAX_INJECTIVE_VERTICES = 5


def _as_array(A) -> np.ndarray:
    if isinstance(A, SymmetricMatrix):
        return A.entries
    if isinstance(A, SpectralSample):
        return A.matrix.entries
    return np.asarray(A, dtype=float)


def _check_z(z) -> complex:
    z = complex(z)
    if z.imag == 0:
        raise DomainError("spectral parameter must be off the real axis")
    return z


class SpectralSample:
    """Eigen-data of one matrix, computed lazily and cached.

    Eigenvalues come from the symmetric tridiagonal reduction in LAPACK
    (``eigvalsh``); eigenvectors are only computed when a resolvent diagonal
    is requested.
    """

    def __init__(self, matrix):
        if not isinstance(matrix, SymmetricMatrix):
            matrix = SymmetricMatrix(np.asarray(matrix, dtype=float), seed=0)
        self.matrix = matrix
        self._eigvals = None
        self._eigvecs = None
        self._diag_cache: Dict[complex, np.ndarray] = {}

    @property
    def N(self) -> int:
        return self.matrix.N

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eigvals is None:
            if self._eigvecs is None:
                self._eigvals = np.linalg.eigvalsh(self.matrix.entries)
            self._eigvals.setflags(write=False)
        return self._eigvals

    def _eigh(self):
        if self._eigvecs is None:
            w, v = np.linalg.eigh(self.matrix.entries)
            self._eigvals, self._eigvecs = w, v
        return self._eigvals, self._eigvecs

    def resolvent_diagonal(self, z) -> np.ndarray:
        z = _check_z(z)
        if z not in self._diag_cache:
            w, v = self._eigh()
            d = (v * v) @ (1.0 / (z - w))
            d.setflags(write=False)
            self._diag_cache[z] = d
        return self._diag_cache[z]

    def trace_resolvent(self, z) -> complex:
        z = _check_z(z)
        return complex(np.sum(1.0 / (z - self.eigenvalues)))

    def trace_power(self, K: int) -> float:
        # one matrix product beats a full eigensolve for the low powers
        if self._eigvals is None and K <= 4:
            return trace_power(self.matrix, K, method="matrix")
        return float(np.sum(self.eigenvalues**K))

    def trace_function(self, f: Callable) -> float:
        return float(np.sum(f(self.eigenvalues)))


class PowerMethod(str, enum.Enum):
    EIGEN = "eigen"
    MATRIX = "matrix"


def trace_power(A, K: int, method: str = "eigen") -> float:
    """``Tr A**K`` from the eigenvalues or from repeated multiplication."""
    if not 1 <= K <= MAX_POWER:
        raise ConfigurationError(f"K must lie in [1, {MAX_POWER}]")
    if PowerMethod(method) is PowerMethod.EIGEN:
        if isinstance(A, SpectralSample):
            return A.trace_power(K)
        return float(np.sum(np.linalg.eigvalsh(_as_array(A)) ** K))
    a = _as_array(A)
    half = np.linalg.matrix_power(a, K // 2)
    other = half @ a if K % 2 else half
    # Tr(X Y) = sum(X * Y.T) and both factors are symmetric
    return float(np.sum(half * other))


def trace_resolvent(A, z) -> complex:
    """``Tr (z - A)**-1`` for ``z`` off the real axis."""
    if isinstance(A, SpectralSample):
        return A.trace_resolvent(z)
    z = _check_z(z)
    return complex(np.sum(1.0 / (z - np.linalg.eigvalsh(_as_array(A)))))


def resolvent_diagonal(A, z) -> np.ndarray:
    """Diagonal entries ``G(z)_jj`` of the resolvent."""
    if not isinstance(A, SpectralSample):
        A = SpectralSample(A)
    return A.resolvent_diagonal(z)


def trace_function(A, f: Callable) -> float:
    """``sum_i f(lambda_i)``; ``f`` must accept a numpy array."""
    if isinstance(A, SpectralSample):
        return A.trace_function(f)
    return float(np.sum(f(np.linalg.eigvalsh(_as_array(A)))))


@lru_cache(maxsize=None)
def _injections(N: int, n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(N), n)), dtype=np.intp).reshape(-1, n)


def injective_trace(A, T: MultiGraph) -> float:
    """``(1/N) sum over injective phi: V -> [N] of prod_e A(phi(e))``."""
    a = _as_array(A)
    N = a.shape[0]
    if N > MAX_INJECTIVE_N or T.n_vertices > MAX_INJECTIVE_VERTICES:
        raise CapacityError(
            f"injective trace enumeration limited to N <= {MAX_INJECTIVE_N} "
            f"and |V| <= {MAX_INJECTIVE_VERTICES}"
        )
    if T.n_vertices > N:
        return 0.0
    phi = _injections(N, T.n_vertices)
    prod = np.ones(len(phi))
    for (i, j), m in T.edges:
        prod *= a[phi[:, i], phi[:, j]] ** m
    return float(prod.sum() / N)


class Normalization(str, enum.Enum):
    SQRT_N = "SqrtN"
    ONE = "One"


def centered_statistic(samples: Sequence, normalization="One", N: int = None) -> np.ndarray:
    """Subtract the sample mean; divide by ``sqrt(N)`` for ``SqrtN``.

    The sample mean stands in for the unknown exact expectation.
    """
    x = np.asarray(samples)
    if x.ndim != 1 or x.size < 2:
        raise ConfigurationError("centering needs at least 2 samples")
    out = x - x.mean()
    if Normalization(normalization) is Normalization.SQRT_N:
        if N is None:
            raise ConfigurationError("SqrtN normalisation needs the matrix dimension N")
        out = out / math.sqrt(N)
    return out


def expanded_moment(A, K: int) -> float:
    """``sum over partitions pi of {1..K}`` of ``injective_trace(A, T^pi)``.

    Equals ``(1/N) Tr A**K`` exactly; used as an independent route to the
    normalised moment on small matrices.
    """
    from .combinatorics import partitions, quotient_cycle_graph

    return sum(injective_trace(A, quotient_cycle_graph(pi)) for pi in partitions(K))
