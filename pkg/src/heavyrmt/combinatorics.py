"""Set partitions, quotient multigraphs, fat trees and gluings.

The normalised moment ``(1/N) Tr A**K`` splits into injective traces over the
quotient graphs ``T^pi`` of the K-cycle, one per set partition ``pi``.  For
exploding-moment matrices the expected injective trace of a graph tends to
``prod_k C_k**q_k`` when the graph is a fat tree (a tree once multiplicities
are forgotten, ``q_k`` edges of multiplicity ``2k``) and to 0 otherwise.  The
limiting covariance of the sqrt(N)-scaled moments is the sum of the same
functional over all gluings of two quotient graphs along a shared edge.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

from .errors import CapacityError, ConfigurationError

MAX_PARTITION_SIZE = 10
MAX_GLUING_VERTICES = 10
MAX_COVARIANCE_ORDER = 7


@dataclass(frozen=True)
class Partition:
    """A set partition of ``{1, ..., K}``; blocks sorted by their minimum."""

    K: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        flat = sorted(x for b in blocks for x in b)
        if flat != list(range(1, self.K + 1)):
            raise ConfigurationError(f"blocks {self.blocks} do not partition 1..{self.K}")
        object.__setattr__(self, "blocks", blocks)

    def block_of(self) -> Dict[int, int]:
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def __len__(self):
        return len(self.blocks)


def _restricted_growth(K: int) -> Iterator[List[int]]:
    # a[i] <= max(a[:i]) + 1 enumerates each partition exactly once
    a = [0] * K

    def rec(i, m):
        if i == K:
            yield list(a)
            return
        for v in range(m + 2):
            a[i] = v
            yield from rec(i + 1, max(m, v))

    if K == 0:
        yield []
        return
    yield from rec(1, 0)


@lru_cache(maxsize=None)
def _partitions_cached(K: int) -> Tuple[Partition, ...]:
    out = []
    for rgs in _restricted_growth(K):
        blocks: Dict[int, List[int]] = {}
        for i, label in enumerate(rgs, start=1):
            blocks.setdefault(label, []).append(i)
        out.append(Partition(K, tuple(tuple(b) for b in blocks.values())))
    return tuple(out)


def partitions(K: int) -> List[Partition]:
    """All set partitions of ``{1..K}`` in canonical (restricted growth) order."""
    if not 1 <= K <= MAX_PARTITION_SIZE:
        raise ConfigurationError(f"K must lie in [1, {MAX_PARTITION_SIZE}], got {K}")
    return list(_partitions_cached(K))


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle; independent of :func:`partitions`."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


Edge = Tuple[int, int]


@dataclass(frozen=True)
class MultiGraph:
    """Undirected multigraph with loops; vertices are ``0..n_vertices-1``.

    ``edges`` is stored as a sorted tuple of ``((i, j), multiplicity)`` with
    ``i <= j``; use :meth:`edge_map` for dictionary access.
    """

    n_vertices: int
    edges: Tuple[Tuple[Edge, int], ...]

    def __post_init__(self):
        merged: Dict[Edge, int] = {}
        for (i, j), m in (self.edges.items() if isinstance(self.edges, dict) else self.edges):
            if m == 0:
                continue
            if m < 0:
                raise ConfigurationError("edge multiplicities must be positive")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ConfigurationError(f"edge {(i, j)} out of range")
            key = (min(i, j), max(i, j))
            merged[key] = merged.get(key, 0) + int(m)
        object.__setattr__(self, "edges", tuple(sorted(merged.items())))

    @classmethod
    def from_edges(cls, n_vertices: int, edge_list: Sequence[Edge]) -> "MultiGraph":
        """Build from a list of edges, repeated edges accumulating multiplicity."""
        return cls(n_vertices, tuple(((i, j), 1) for i, j in edge_list))

    def edge_map(self) -> Dict[Edge, int]:
        return dict(self.edges)

    @property
    def n_edges(self) -> int:
        return sum(m for _, m in self.edges)

    def has_loop(self) -> bool:
        return any(i == j for (i, j), _ in self.edges)

    def relabel(self, perm: Sequence[int]) -> "MultiGraph":
        return MultiGraph(self.n_vertices, tuple(((perm[i], perm[j]), m) for (i, j), m in self.edges))

    def is_connected(self) -> bool:
        if self.n_vertices <= 1:
            return True
        adj = {v: set() for v in range(self.n_vertices)}
        for (i, j), _ in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def is_fat_tree(self) -> bool:
        """Skeleton is a tree without loops and every multiplicity is even."""
        if self.has_loop() or not self.is_connected():
            return False
        if len(self.edges) != self.n_vertices - 1:
            return False
        return all(m % 2 == 0 for _, m in self.edges)


@dataclass(frozen=True)
class CSequence:
    """Limits ``C_1, C_2, ...`` of ``N E[a**(2k)]``; indexing is 1-based."""

    values: Tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ConfigurationError("C_k must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, k: int) -> float:
        if not 1 <= k <= len(self.values):
            raise ConfigurationError(f"C_{k} requested but only C_1..C_{len(self.values)} known")
        return self.values[k - 1]

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_measure(cls, measure, kmax: int = 12) -> "CSequence":
        """``C_(k+1) = sum_i w_i x_i**k`` (with ``0**0 = 1``)."""
        return cls(tuple(sum(w * (x**k if k else 1.0) for x, w in measure) for k in range(kmax)))

    @classmethod
    def constant(cls, c: float, kmax: int = 12) -> "CSequence":
        return cls((c,) * kmax)


def quotient_cycle_graph(pi: Partition) -> MultiGraph:
    """Quotient of the K-cycle ``1 -> 2 -> ... -> K -> 1`` by ``pi``."""
    block = pi.block_of()
    K = pi.K
    steps = [(block[n], block[n % K + 1]) for n in range(1, K + 1)]
    return MultiGraph.from_edges(len(pi), steps)


def tau0(T: MultiGraph, C: CSequence) -> float:
    """Limiting injective trace: ``prod_k C_k**q_k`` on fat trees, else 0."""
    if not T.is_fat_tree():
        return 0.0
    out = 1.0
    for _, m in T.edges:
        out *= C[m // 2]
    return out


def _shares_edge(e1: Sequence[Edge], e2: Sequence[Edge], match: Dict[int, int]) -> bool:
    for a, b in e1:
        ma, mb = match.get(a), match.get(b)
        if ma is None or mb is None:
            continue
        for c, d in e2:
            if (ma, mb) == (c, d) or (ma, mb) == (d, c):
                return True
    return False


def _partial_injections(n1: int, n2: int) -> Iterator[Dict[int, int]]:
    for r in range(min(n1, n2) + 1):
        for src in itertools.combinations(range(n1), r):
            for dst in itertools.permutations(range(n2), r):
                yield dict(zip(src, dst))


def _merge(T1: MultiGraph, T2: MultiGraph, match: Dict[int, int]) -> MultiGraph:
    # vertices of T1 keep their labels; unmatched vertices of T2 follow
    label2 = {}
    inverse = {v: u for u, v in match.items()}
    nxt = T1.n_vertices
    for v in range(T2.n_vertices):
        if v in inverse:
            label2[v] = inverse[v]
        else:
            label2[v] = nxt
            nxt += 1
    edges = list(T1.edges) + [((label2[i], label2[j]), m) for (i, j), m in T2.edges]
    return MultiGraph(nxt, tuple(edges))


def gluings(T1: MultiGraph, T2: MultiGraph) -> List[MultiGraph]:
    """All merges of disjoint copies of T1 and T2 that share at least one edge.

    A merge identifies some vertices of T1 with distinct vertices of T2 (each
    block of the vertex partition holds at most one vertex of each graph).
    Each such vertex matching is returned once; multiplicities add.
    """
    if T1.n_vertices + T2.n_vertices > MAX_GLUING_VERTICES:
        raise CapacityError("gluing enumeration limited to 10 vertices in total")
    e1 = [e for e, _ in T1.edges]
    e2 = [e for e, _ in T2.edges]
    return [
        _merge(T1, T2, match)
        for match in _partial_injections(T1.n_vertices, T2.n_vertices)
        if _shares_edge(e1, e2, match)
    ]


def limiting_moment_mean(K: int, C: CSequence) -> float:
    """``lim E[(1/N) Tr A**K] = sum over partitions pi of tau0(T^pi, C)``."""
    return sum(tau0(quotient_cycle_graph(pi), C) for pi in partitions(K))


@lru_cache(maxsize=None)
def _fat_tree_quotients(K: int) -> Tuple[MultiGraph, ...]:
    # a gluing contains each input graph as a subgraph, so a loop or a cycle
    # in T^pi survives every gluing and tau0 vanishes
    out = []
    for pi in _partitions_cached(K):
        T = quotient_cycle_graph(pi)
        if not T.has_loop() and T.is_connected() and len(T.edges) == T.n_vertices - 1:
            out.append(T)
    return tuple(out)


def limiting_moment_covariance(K1: int, K2: int, C: CSequence) -> float:
    """Limiting covariance of ``N**-1/2 (Tr A**K1 - E Tr A**K1)`` and the K2 analogue."""
    for K in (K1, K2):
        if not 1 <= K <= MAX_COVARIANCE_ORDER:
            raise CapacityError(f"covariance enumeration limited to K <= {MAX_COVARIANCE_ORDER}")
    total = 0.0
    for T1 in _fat_tree_quotients(K1):
        for T2 in _fat_tree_quotients(K2):
            total += sum(tau0(T, C) for T in gluings(T1, T2))
    return total


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)
