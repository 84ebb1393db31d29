import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavyrmt.combinatorics import (
    CSequence,
    MultiGraph,
    Partition,
    bell_number,
    catalan,
    gluings,
    limiting_moment_covariance,
    limiting_moment_mean,
    partitions,
    quotient_cycle_graph,
    tau0,
)
from heavyrmt.errors import CapacityError, ConfigurationError

SEMICIRCLE = CSequence((1.0,) + (0.0,) * 11)


@pytest.mark.parametrize("K", range(1, 11))
def test_partition_count_is_bell_number(K):
    parts = partitions(K)
    assert len(parts) == bell_number(K)
    assert len(set(parts)) == len(parts)


def test_bell_numbers():
    assert [bell_number(n) for n in range(8)] == [1, 1, 2, 5, 15, 52, 203, 877]


def test_partition_limits():
    with pytest.raises(ConfigurationError):
        partitions(11)
    with pytest.raises(ConfigurationError):
        Partition(3, ((1, 2),))


def test_quotient_of_finest_partition_is_cycle():
    K = 5
    finest = partitions(K)[-1]
    assert len(finest) == K
    T = quotient_cycle_graph(finest)
    assert T.n_edges == K and not T.is_fat_tree()


def test_quotient_of_coarsest_partition_is_loop():
    T = quotient_cycle_graph(partitions(4)[0])
    assert T.edges == (((0, 0), 4),)
    assert T.has_loop()


@pytest.mark.parametrize("K", range(1, 9))
def test_quotients_keep_all_steps(K):
    for pi in partitions(K):
        T = quotient_cycle_graph(pi)
        assert T.n_edges == K and T.is_connected()


def test_semicircle_means_are_catalan():
    for K in range(1, 11):
        want = catalan(K // 2) if K % 2 == 0 else 0
        assert limiting_moment_mean(K, SEMICIRCLE) == want


def test_er_means():
    # C_k = 1 for every k: limit moments of the sparse ER spectrum with p = 1
    C = CSequence.constant(1.0)
    assert [limiting_moment_mean(K, C) for K in range(1, 9)] == [0, 1, 0, 3, 0, 12, 0, 57]


def test_er_mean_fourth_moment_formula():
    # 2 p^2 + p for C_k = p
    for p in (0.5, 1.0, 2.0, 3.0):
        assert limiting_moment_mean(4, CSequence.constant(p)) == pytest.approx(2 * p * p + p)


def test_csequence_indexing():
    C = CSequence((1.0, 2.0))
    assert C[2] == 2.0
    with pytest.raises(ConfigurationError):
        C[3]
    with pytest.raises(ConfigurationError):
        CSequence((-1.0,))


def test_fat_tree_detection():
    assert MultiGraph(2, {(0, 1): 2}).is_fat_tree()
    assert not MultiGraph(2, {(0, 1): 3}).is_fat_tree()
    assert not MultiGraph(1, {(0, 0): 2}).is_fat_tree()
    assert not MultiGraph(3, {(0, 1): 2, (1, 2): 2, (0, 2): 2}).is_fat_tree()
    assert MultiGraph(3, {(0, 1): 4, (1, 2): 2}).is_fat_tree()


def test_tau0_values():
    C = CSequence((1.0, 2.0, 5.0))
    assert tau0(MultiGraph(3, {(0, 1): 4, (1, 2): 2}), C) == 2.0
    assert tau0(MultiGraph(2, {(0, 1): 6}), C) == 5.0
    assert tau0(MultiGraph(2, {(0, 1): 1}), C) == 0.0


def _brute_force_gluings(T1, T2):
    """Set partitions of the disjoint union V1 + V2 with at most one vertex of
    each graph per block, in which some edge of T1 and some edge of T2 join
    the same pair of blocks."""
    n1, n2 = T1.n_vertices, T2.n_vertices
    count = 0
    for pi in partitions(n1 + n2):
        block = pi.block_of()
        if any(sum(1 for x in b if x <= n1) > 1 or sum(1 for x in b if x > n1) > 1
               for b in pi.blocks):
            continue
        e1 = {frozenset((block[a + 1], block[b + 1])) for (a, b), _ in T1.edges}
        e2 = {frozenset((block[n1 + a + 1], block[n1 + b + 1])) for (a, b), _ in T2.edges}
        if e1 & e2:
            count += 1
    return count


@pytest.mark.parametrize("K1,K2", [(2, 2), (2, 4), (3, 3), (4, 2), (4, 4)])
def test_gluing_count_matches_brute_force(K1, K2):
    seen = 0
    for p1 in partitions(K1):
        for p2 in partitions(K2):
            T1, T2 = quotient_cycle_graph(p1), quotient_cycle_graph(p2)
            if K1 + K2 == 8 and not (T1.is_fat_tree() and T2.is_fat_tree()):
                continue
            assert len(gluings(T1, T2)) == _brute_force_gluings(T1, T2)
            seen += 1
    assert seen > 0


def test_gluing_of_single_edges():
    e = MultiGraph(2, {(0, 1): 2})
    glued = gluings(e, e)
    # the edge can be matched in two orientations
    assert len(glued) == 2
    assert all(g.edges == (((0, 1), 4),) for g in glued)


def test_gluing_capacity():
    big = MultiGraph(6, {(i, i + 1): 2 for i in range(5)})
    with pytest.raises(CapacityError):
        gluings(big, big)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_covariance_of_second_moment(c):
    # Var(Tr A^2)/N -> 2 C_2 since each off-diagonal entry appears twice
    assert limiting_moment_covariance(2, 2, CSequence.constant(c)) == pytest.approx(2 * c)


def test_covariance_values_constant_c():
    C = CSequence.constant(1.0)
    assert limiting_moment_covariance(2, 4, C) == 10
    assert limiting_moment_covariance(4, 4, C) == 58
    assert limiting_moment_covariance(4, 6, C) == 352


def test_covariance_symmetric_and_odd_vanishes():
    C = CSequence((1.0, 2.0, 3.0, 4.0, 5.0, 6.0))
    for a, b in [(2, 4), (2, 6), (4, 6)]:
        assert limiting_moment_covariance(a, b, C) == limiting_moment_covariance(b, a, C)
    for a in (1, 3, 5):
        for b in range(1, 6):
            assert limiting_moment_covariance(a, b, C) == 0


def test_semicircle_covariance_vanishes():
    assert limiting_moment_covariance(4, 4, SEMICIRCLE) == 0


def test_covariance_capacity():
    with pytest.raises(CapacityError):
        limiting_moment_covariance(8, 2, CSequence.constant(1.0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=5), st.data())
def test_property_random_trees_with_even_multiplicity_are_fat(mults, data):
    n = len(mults) + 1
    edges = {}
    for v in range(1, n):
        parent = data.draw(st.integers(0, v - 1))
        edges[(parent, v)] = 2 * mults[v - 1]
    T = MultiGraph(n, edges)
    assert T.is_fat_tree()
    perm = data.draw(st.permutations(range(n)))
    assert T.relabel(perm).is_fat_tree()
    a, b = data.draw(st.sampled_from([(i, j) for i in range(n) for j in range(i + 1, n)]))
    extra = dict(T.edge_map())
    extra[(a, b)] = extra.get((a, b), 0) + 1
    assert not MultiGraph(n, extra).is_fat_tree()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.data())
def test_property_tau0_multiplicative_in_c(K, data):
    # scaling C_k by c^k scales every fat-tree weight by c^(K/2)
    c = data.draw(st.floats(0.5, 2.0))
    base = CSequence((1.0, 2.0, 3.0, 4.0))
    scaled = CSequence(tuple(v * c**k for k, v in enumerate(base.values, start=1)))
    assert limiting_moment_mean(K, scaled) == pytest.approx(
        limiting_moment_mean(K, base) * c ** (K / 2)
    )
