"""Pants-decomposition graphs and the rank-2 lattice-point count.

A genus-``g`` surface cut along ``3g - 3`` curves falls into ``2g - 2``
trinions; the dual graph is trivalent, with a self-loop when two cuffs of one
trinion are glued together. Labels ``a_e in {0..k}`` on edges are admissible
when at every vertex ``(a, b, c)`` has even sum, satisfies the triangle
inequalities and ``a + b + c <= 2k``.
"""

from __future__ import annotations

import itertools
import string
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from nodal_moduli.errors import InvariantViolation


@dataclass(frozen=True)
class TrinionGraph:
    vertices: int
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        edges = tuple(tuple(sorted((int(u), int(v)))) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        V = self.vertices
        if V < 2 or V % 2:
            raise InvariantViolation(f"need an even number >= 2 of vertices, got {V}")
        if any(not (0 <= u < V and 0 <= v < V) for u, v in edges):
            raise InvariantViolation("edge endpoint out of range")
        deg = Counter()
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        if any(deg[x] != 3 for x in range(V)):
            raise InvariantViolation(f"graph is not trivalent: degrees {[deg[x] for x in range(V)]}")
        if 3 * V != 2 * len(edges):
            raise InvariantViolation("edge and vertex counts disagree")
        if not self._connected():
            raise InvariantViolation("graph is not connected")

    def _connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for u, v in self.edges:
                for a, b in ((u, v), (v, u)):
                    if a == x and b not in seen:
                        seen.add(b)
                        stack.append(b)
        return len(seen) == self.vertices

    @property
    def genus(self) -> int:
        return self.vertices // 2 + 1

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_slots(self) -> list[list[int]]:
        """Edge indices incident to each vertex; a self-loop appears twice."""
        slots = [[] for _ in range(self.vertices)]
        for e, (u, v) in enumerate(self.edges):
            slots[u].append(e)
            slots[v].append(e)
        return slots

    def to_json(self) -> dict:
        return {"vertices": self.vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> TrinionGraph:
        return cls(int(data["vertices"]), tuple(tuple(e) for e in data["edges"]), data.get("name", ""))

    def relabel(self, perm) -> TrinionGraph:
        return TrinionGraph(self.vertices, tuple((perm[u], perm[v]) for u, v in self.edges), self.name)

    def canonical_key(self) -> tuple:
        """Lexicographically least sorted edge list over all vertex relabelings."""
        return min(tuple(sorted(tuple(sorted((p[u], p[v]))) for u, v in self.edges)) for p in itertools.permutations(range(self.vertices)))


def is_isomorphic(g1: TrinionGraph, g2: TrinionGraph) -> bool:
    if g1.vertices != g2.vertices:
        return False
    target = Counter(g2.edges)
    for p in itertools.permutations(range(g1.vertices)):
        if Counter(tuple(sorted((p[u], p[v]))) for u, v in g1.edges) == target:
            return True
    return False


def necklace_graph(g: int) -> TrinionGraph:
    """Cycle on ``2g - 2`` vertices with chords ``(2i, 2i + 1)``; the theta graph at ``g = 2``."""
    V = 2 * g - 2
    edges = [(i, (i + 1) % V) for i in range(V)] + [(2 * i, 2 * i + 1) for i in range(g - 1)]
    return TrinionGraph(V, tuple(edges), "necklace" if g > 2 else "theta")


def caterpillar_graph(g: int) -> TrinionGraph:
    """Trivalent tree with ``g`` leaves, each leaf carrying a self-loop; the dumbbell at ``g = 2``."""
    if g == 2:
        return TrinionGraph(2, ((0, 0), (1, 1), (0, 1)), "dumbbell")
    spine = list(range(g - 2))
    leaves = list(range(g - 2, 2 * g - 2))
    edges = [(a, b) for a, b in zip(spine[:-1], spine[1:])]
    attach = [spine[0], spine[0]] + spine[1:-1] + [spine[-1], spine[-1]] if g > 3 else [spine[0]] * 3
    edges += [(s, leaf) for s, leaf in zip(attach, leaves)]
    edges += [(leaf, leaf) for leaf in leaves]
    return TrinionGraph(2 * g - 2, tuple(edges), "caterpillar")


def standard_graphs(g: int) -> list[TrinionGraph]:
    if g < 2:
        raise ValueError("g must be at least 2")
    return [necklace_graph(g), caterpillar_graph(g)]


def enumerate_trivalent_graphs(g: int) -> list[TrinionGraph]:
    """All connected trivalent multigraphs (loops allowed) with ``2g - 2`` vertices, up to isomorphism."""
    V = 2 * g - 2
    pairs = [(u, v) for u in range(V) for v in range(u, V)]
    seen = {}
    for combo in itertools.combinations_with_replacement(range(len(pairs)), 3 * g - 3):
        deg = [0] * V
        for c in combo:
            u, v = pairs[c]
            deg[u] += 1
            deg[v] += 1
        if any(d != 3 for d in deg):
            continue
        try:
            graph = TrinionGraph(V, tuple(pairs[c] for c in combo))
        except InvariantViolation:
            continue
        seen.setdefault(graph.canonical_key(), graph)
    return list(seen.values())


# -- admissibility and counting -------------------------------------------------


def admissible(a: int, b: int, c: int, k: int) -> bool:
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b and a + b + c <= 2 * k


def is_admissible_labeling(graph: TrinionGraph, labels, k: int) -> bool:
    if any(not 0 <= x <= k for x in labels):
        return False
    return all(admissible(*(labels[e] for e in slot), k) for slot in graph.vertex_slots())


def count_lattice_points(graph: TrinionGraph, k: int) -> int:
    """Exhaustive count over all ``(k + 1)^(3g - 3)`` labelings."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    slots = graph.vertex_slots()
    table = _admissibility_table(k)
    count = 0
    for labels in itertools.product(range(k + 1), repeat=graph.n_edges):
        if all(table[labels[a], labels[b], labels[c]] for a, b, c in slots):
            count += 1
    return count


def count_by_contraction(graph: TrinionGraph, k: int) -> int:
    """The same count as a tensor-network contraction of 0/1 vertex tensors."""
    table = _admissibility_table(k).astype(np.int64)
    letters = string.ascii_letters
    if graph.n_edges > len(letters):
        raise ValueError("graph too large for a single contraction")
    ops = []
    subs = []
    for slot in graph.vertex_slots():
        subs.append("".join(letters[e] for e in slot))
        ops.append(table)
    return int(np.einsum(",".join(subs) + "->", *ops, optimize="greedy"))


def _admissibility_table(k: int) -> np.ndarray:
    r = np.arange(k + 1)
    a, b, c = np.meshgrid(r, r, r, indexing="ij")
    return ((a + b + c) % 2 == 0) & (np.abs(a - b) <= c) & (c <= a + b) & (a + b + c <= 2 * k)


def verlinde_closed_form(g: int, k: int) -> float:
    """Rank-2 level-``k`` Verlinde number from the sine sum."""
    j = np.arange(1, k + 2)
    s = np.sin(j * np.pi / (k + 2))
    return float(((k + 2) / 2.0) ** (g - 1) * np.sum(s ** (2 - 2 * g)))


@dataclass
class VerlindeCheck:
    g: int
    k: int
    counts: dict[str, int]
    closed_form: float
    agree: bool
    graph_independent: bool

    @property
    def count(self) -> int:
        return next(iter(self.counts.values()))


def verlinde_crosscheck(g: int, k: int, graphs=None, *, method: str = "auto") -> VerlindeCheck:
    graphs = graphs if graphs is not None else standard_graphs(g)
    counter = _counter(method, g, k)
    counts = {}
    for i, graph in enumerate(graphs):
        counts[graph.name or f"graph{i}"] = counter(graph, k)
    closed = verlinde_closed_form(g, k)
    values = set(counts.values())
    independent = len(values) == 1
    agree = independent and abs(closed - next(iter(values))) < 1e-6 * max(1.0, closed)
    return VerlindeCheck(g, k, counts, closed, agree, independent)


def _counter(method, g, k):
    if method == "brute":
        return count_lattice_points
    if method == "contract":
        return count_by_contraction
    # exhaustive enumeration while it stays small, contraction beyond
    return count_lattice_points if (k + 1) ** (3 * g - 3) <= 200_000 else count_by_contraction


# -- dimension bookkeeping ------------------------------------------------------


@dataclass
class DimensionLedger:
    g: int
    n: int
    trinions: int
    punctures: int
    nodes: int
    torus_dim: int
    target: int
    per_trinion: list[tuple[str, int]]
    global_terms: list[tuple[str, int]]

    @property
    def per_trinion_budget(self) -> int:
        return sum(v for _, v in self.per_trinion)

    @property
    def total(self) -> int:
        return self.trinions * self.per_trinion_budget + sum(v for _, v in self.global_terms)

    @property
    def balanced(self) -> bool:
        return self.total == self.target


def quotient_dimension_bookkeeping(g: int, n: int) -> DimensionLedger:
    if g < 2 or n < 2:
        raise ValueError("need g >= 2 and n >= 2")
    d = n * n - 1
    torus = (3 * g - 3) * (n - 1)
    per = [
        ("three boundary framings", 3 * d),
        ("three boundary torus moments", 3 * (n - 1)),
        ("pants relation", -d),
        ("conjugation", -d),
    ]
    glob = [("torus reduction at the nodes", -2 * torus)]
    ledger = DimensionLedger(g, n, 2 * g - 2, 6 * g - 6, 3 * g - 3, torus, (2 * g - 2) * d, per, glob)
    if not ledger.balanced:
        raise AssertionError(f"dimension ledger does not balance: {ledger.total} != {ledger.target}")
    return ledger
