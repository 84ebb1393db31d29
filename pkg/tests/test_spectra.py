import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heavyrmt.combinatorics import MultiGraph, partitions, quotient_cycle_graph
from heavyrmt.ensembles import EnsembleSpec, EntryLaw, SymmetricMatrix, sample_matrix
from heavyrmt.errors import CapacityError, ConfigurationError, DomainError
from heavyrmt.spectra import (
    SpectralSample,
    centered_statistic,
    expanded_moment,
    injective_trace,
    resolvent_diagonal,
    trace_function,
    trace_power,
    trace_resolvent,
)


def _gauss(N, seed):
    return sample_matrix(EnsembleSpec.wigner(EntryLaw.GAUSSIAN), N, seed)


@pytest.mark.parametrize("K", range(1, 13))
def test_trace_power_methods_agree(K):
    A = _gauss(40, K)
    assert trace_power(A, K, "eigen") == pytest.approx(trace_power(A, K, "matrix"), rel=1e-9, abs=1e-9)


def test_trace_power_small_example():
    A = SymmetricMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]), seed=0)
    assert trace_power(A, 2) == pytest.approx(2.0)
    assert trace_power(A, 3) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        trace_power(A, 13)


def test_sample_cache_matches_functions():
    A = _gauss(30, 1)
    s = SpectralSample(A)
    assert s.trace_power(3) == pytest.approx(trace_power(A, 3))
    assert s.trace_power(6) == pytest.approx(trace_power(A, 6))
    assert s.trace_resolvent(1 + 1j) == pytest.approx(trace_resolvent(A, 1 + 1j))
    assert s.trace_function(np.cos) == pytest.approx(trace_function(A, np.cos))
    assert s.eigenvalues is s.eigenvalues


def test_resolvent_against_direct_inverse():
    A = _gauss(25, 2)
    z = 0.3 + 0.7j
    G = np.linalg.inv(z * np.eye(25) - A.entries)
    assert trace_resolvent(A, z) == pytest.approx(np.trace(G))
    assert np.allclose(resolvent_diagonal(A, z), np.diag(G))
    assert np.allclose(resolvent_diagonal(A, z.conjugate()), np.diag(G).conj())


def test_resolvent_domain():
    with pytest.raises(DomainError):
        trace_resolvent(_gauss(5, 0), 1.0)


def _triple_loop(a, T):
    """Brute-force injective sum for graphs on three vertices."""
    N = a.shape[0]
    total = 0.0
    for i in range(N):
        for j in range(N):
            for k in range(N):
                if len({i, j, k}) < 3:
                    continue
                phi = (i, j, k)
                prod = 1.0
                for (u, v), m in T.edges:
                    prod *= a[phi[u], phi[v]] ** m
                total += prod
    return total / N


@pytest.mark.parametrize("edges", [
    {(0, 1): 1, (1, 2): 1, (0, 2): 1},
    {(0, 1): 2, (1, 2): 2},
    {(0, 0): 1, (0, 1): 3, (1, 2): 1},
])
def test_injective_trace_matches_triple_loop(edges):
    a = _gauss(6, 9).entries
    T = MultiGraph(3, edges)
    assert injective_trace(a, T) == pytest.approx(_triple_loop(a, T), rel=1e-12)


def test_injective_trace_more_vertices_than_n():
    a = _gauss(3, 0).entries
    assert injective_trace(a, MultiGraph(4, {(0, 1): 1, (2, 3): 1})) == 0.0


def test_injective_trace_capacity():
    with pytest.raises(CapacityError):
        injective_trace(_gauss(9, 0).entries, MultiGraph(2, {(0, 1): 1}))
    with pytest.raises(CapacityError):
        injective_trace(_gauss(7, 0).entries, MultiGraph(6, {(0, 1): 1}))


@settings(max_examples=20, deadline=None)
@given(
    N=st.integers(2, 7),
    K=st.integers(1, 5),
    data=st.data(),
)
def test_property_expansion_identity(N, K, data):
    lower = data.draw(arrays(np.float64, (N, N), elements=st.floats(-2, 2)))
    A = SymmetricMatrix.from_lower(lower)
    direct = trace_power(A, K, "matrix") / N
    assert expanded_moment(A, K) == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_expansion_term_count():
    # every partition contributes one quotient graph
    assert sum(1 for _ in map(quotient_cycle_graph, partitions(5))) == 52


def test_centered_statistic():
    x = np.array([1.0, 2.0, 3.0, 6.0])
    assert np.allclose(centered_statistic(x), x - 3.0)
    assert np.allclose(centered_statistic(x, "SqrtN", N=4), (x - 3.0) / 2)
    with pytest.raises(ConfigurationError):
        centered_statistic(x, "SqrtN")
    with pytest.raises(ConfigurationError):
        centered_statistic([1.0])
