"""Node-labeled graphs, the JSON graph format, atomic types and the builtin
non-isomorphic pair library."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

BRUTE_FORCE_CAP = 10

EDGE, EQUAL, NEITHER = 1, 2, 3


class GraphFormatError(ValueError):
    """Raised when a graph or pair document is malformed."""


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    edges: frozenset  # frozenset of (i, j) with i < j
    labels: tuple[int, ...]
    edge_features: Mapping[tuple[int, int], tuple[float, ...]] | None = None

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError("node count must be non-negative")
        if len(self.labels) != self.n:
            raise GraphFormatError(f"expected {self.n} labels, got {len(self.labels)}")
        for lab in self.labels:
            if not isinstance(lab, int) or lab < 0:
                raise GraphFormatError(f"labels must be natural numbers, got {lab!r}")
        for i, j in self.edges:
            if i == j:
                raise GraphFormatError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphFormatError(f"edge ({i}, {j}) has endpoint out of range for n={self.n}")
            if i > j:
                raise GraphFormatError("edges must be stored as (min, max)")
        if self.edge_features is not None:
            widths = {len(v) for v in self.edge_features.values()}
            if len(widths) > 1:
                raise GraphFormatError(f"inconsistent edge-feature widths {sorted(widths)}")
            for i, j in self.edge_features:
                if not (0 <= i < self.n and 0 <= j < self.n):
                    raise GraphFormatError(f"edge feature key ({i}, {j}) out of range")

    @classmethod
    def build(cls, n: int, edges: Iterable[Sequence[int]], labels: Sequence[int] | None = None,
              edge_features: Mapping[tuple[int, int], Sequence[float]] | None = None) -> "LabeledGraph":
        canon = set()
        for e in edges:
            if len(e) != 2:
                raise GraphFormatError(f"edge {e!r} must have two endpoints")
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise GraphFormatError(f"self-loop at node {i}")
            canon.add((min(i, j), max(i, j)))
        labs = tuple(int(x) for x in labels) if labels is not None else (0,) * n
        feats = None
        if edge_features:
            feats = {(int(i), int(j)): tuple(float(x) for x in v) for (i, j), v in edge_features.items()}
        return cls(n, frozenset(canon), labs, feats)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, v: int) -> list[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def _adj(self) -> list[list[int]]:
        cached = self.__dict__.get("_adj_cache")
        if cached is None:
            cached = [[] for _ in range(self.n)]
            for i, j in sorted(self.edges):
                cached[i].append(j)
                cached[j].append(i)
            for row in cached:
                row.sort()
            object.__setattr__(self, "_adj_cache", cached)
        return cached

    @property
    def feature_width(self) -> int:
        if not self.edge_features:
            return 0
        return len(next(iter(self.edge_features.values())))

    def edge_feature(self, i: int, j: int) -> tuple[float, ...] | None:
        if not self.edge_features:
            return None
        return self.edge_features.get((i, j))

    def adjacency(self):
        import numpy as np

        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def permute(self, perm: Sequence[int]) -> "LabeledGraph":
        """Relabel node ``v`` as ``perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        labels = [0] * self.n
        for v, lab in enumerate(self.labels):
            labels[perm[v]] = lab
        edges = [(perm[i], perm[j]) for i, j in self.edges]
        feats = None
        if self.edge_features:
            feats = {(perm[i], perm[j]): v for (i, j), v in self.edge_features.items()}
        return LabeledGraph.build(self.n, edges, labels, feats)

    def disjoint_union(self, other: "LabeledGraph") -> "LabeledGraph":
        shift = self.n
        edges = list(self.edges) + [(i + shift, j + shift) for i, j in other.edges]
        feats = None
        if self.edge_features or other.edge_features:
            feats = dict(self.edge_features or {})
            feats.update({(i + shift, j + shift): v for (i, j), v in (other.edge_features or {}).items()})
        return LabeledGraph.build(self.n + other.n, edges, self.labels + other.labels, feats)

    def to_dict(self) -> dict:
        doc = {"n": self.n, "edges": [list(e) for e in sorted(self.edges)], "labels": list(self.labels)}
        if self.edge_features:
            doc["edge_features"] = {f"{i},{j}": list(v) for (i, j), v in sorted(self.edge_features.items())}
        return doc


def graph_from_dict(doc: Mapping) -> LabeledGraph:
    if not isinstance(doc, Mapping):
        raise GraphFormatError("graph document must be a JSON object")
    if "n" not in doc or not isinstance(doc["n"], int) or isinstance(doc["n"], bool):
        raise GraphFormatError("graph document needs an integer 'n'")
    n = doc["n"]
    edges = doc.get("edges", [])
    if not isinstance(edges, list):
        raise GraphFormatError("'edges' must be a list of [i, j] pairs")
    for e in edges:
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(x, int) for x in e):
            raise GraphFormatError(f"bad edge entry {e!r}")
    labels = doc.get("labels")
    if labels is not None and (not isinstance(labels, list) or not all(isinstance(x, int) for x in labels)):
        raise GraphFormatError("'labels' must be a list of integers")
    feats = None
    raw = doc.get("edge_features")
    if raw is not None:
        if not isinstance(raw, Mapping):
            raise GraphFormatError("'edge_features' must be an object keyed by \"i,j\"")
        feats = {}
        for key, vec in raw.items():
            try:
                i, j = (int(x) for x in key.split(","))
            except ValueError:
                raise GraphFormatError(f"bad edge-feature key {key!r}") from None
            if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
                raise GraphFormatError(f"edge feature {key!r} must be a list of numbers")
            feats[(i, j)] = vec
    return LabeledGraph.build(n, edges, labels, feats)


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_graph(text: str) -> LabeledGraph:
    return graph_from_dict(_loads(text))


def dump_graph(g: LabeledGraph) -> str:
    return json.dumps(g.to_dict())


@dataclass(frozen=True)
class AtomicType:
    k: int
    matrix: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    # Ordered-pair edge features between tuple positions; all None for featureless graphs.
    features: tuple[tuple[tuple[float, ...] | None, ...], ...] | None = None


def atomic_type(g: LabeledGraph, tup: Sequence[int]) -> AtomicType:
    k = len(tup)
    if k < 1:
        raise ValueError("tuple must be non-empty")
    for v in tup:
        if not 0 <= v < g.n:
            raise ValueError(f"node {v} out of range for n={g.n}")
    matrix = tuple(
        tuple(EQUAL if tup[a] == tup[b] else EDGE if g.has_edge(tup[a], tup[b]) else NEITHER for b in range(k))
        for a in range(k)
    )
    feats = None
    if g.edge_features:
        feats = tuple(tuple(g.edge_feature(tup[a], tup[b]) for b in range(k)) for a in range(k))
    return AtomicType(k, matrix, tuple(g.labels[v] for v in tup), feats)


def brute_force_isomorphic(g: LabeledGraph, h: LabeledGraph) -> bool:
    if max(g.n, h.n) > BRUTE_FORCE_CAP:
        raise ValueError(f"brute-force isomorphism is capped at n <= {BRUTE_FORCE_CAP}")
    if g.n != h.n or len(g.edges) != len(h.edges) or sorted(g.labels) != sorted(h.labels):
        return False
    if sorted(g.degree(v) for v in range(g.n)) != sorted(h.degree(v) for v in range(h.n)):
        return False
    gf = g.edge_features or {}
    hf = h.edge_features or {}
    if len(gf) != len(hf):
        return False
    n = g.n
    # Backtracking over label- and degree-compatible candidates.
    cands = [[w for w in range(n) if h.labels[w] == g.labels[v] and h.degree(w) == g.degree(v)] for v in range(n)]
    phi = [-1] * n
    used = [False] * n

    def consistent(v: int, w: int) -> bool:
        if gf.get((v, v)) != hf.get((w, w)):
            return False
        for u in range(v):
            x = phi[u]
            if g.has_edge(u, v) != h.has_edge(x, w):
                return False
            if gf.get((u, v)) != hf.get((x, w)) or gf.get((v, u)) != hf.get((w, x)):
                return False
        return True

    def extend(v: int) -> bool:
        if v == n:
            return True
        for w in cands[v]:
            if not used[w] and consistent(v, w):
                phi[v] = w
                used[w] = True
                if extend(v + 1):
                    return True
                used[w] = False
        phi[v] = -1
        return False

    return extend(0)


@dataclass(frozen=True)
class GraphPair:
    name: str
    g: LabeledGraph
    h: LabeledGraph
    expected: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.g.n != self.h.n:
            raise GraphFormatError(f"pair {self.name!r}: graphs have different orders {self.g.n} != {self.h.n}")

    def to_dict(self) -> dict:
        doc = {"name": self.name, "g": self.g.to_dict(), "h": self.h.to_dict()}
        if self.expected:
            doc["expected"] = dict(self.expected)
        return doc


def parse_pair(text: str) -> GraphPair:
    doc = _loads(text)
    if not isinstance(doc, Mapping) or "g" not in doc or "h" not in doc:
        raise GraphFormatError("pair document needs 'g' and 'h'")
    expected = doc.get("expected", {})
    verdicts = ("distinguishable", "indistinguishable")
    if not isinstance(expected, Mapping) or any(v not in verdicts for v in expected.values()):
        raise GraphFormatError(f"'expected' must map method names to one of {verdicts}")
    return GraphPair(str(doc.get("name", "pair")), graph_from_dict(doc["g"]), graph_from_dict(doc["h"]),
                     dict(expected))


# --- graph families -------------------------------------------------------

def cycle(n: int) -> LabeledGraph:
    return LabeledGraph.build(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> LabeledGraph:
    return LabeledGraph.build(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> LabeledGraph:
    return LabeledGraph.build(n, itertools.combinations(range(n), 2))


def star(leaves: int) -> LabeledGraph:
    return LabeledGraph.build(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def disjoint_cycles(length: int, copies: int) -> LabeledGraph:
    edges = []
    for c in range(copies):
        base = c * length
        edges += [(base + i, base + (i + 1) % length) for i in range(length)]
    return LabeledGraph.build(length * copies, edges)


def rook_graph(m: int = 4) -> LabeledGraph:
    """Line graph of K_{m,m}: cells of an m x m board, adjacent when sharing a row or column."""
    cells = [(r, c) for r in range(m) for c in range(m)]
    edges = [(a, b) for a, b in itertools.combinations(range(len(cells)), 2)
             if cells[a][0] == cells[b][0] or cells[a][1] == cells[b][1]]
    return LabeledGraph.build(m * m, edges)


def shrikhande_graph() -> LabeledGraph:
    """Cayley graph on Z4 x Z4 with connection set {±(0,1), ±(1,0), ±(1,1)}."""
    gens = [(0, 1), (0, 3), (1, 0), (3, 0), (1, 1), (3, 3)]
    idx = lambda a, b: 4 * (a % 4) + (b % 4)  # noqa: E731
    edges = {tuple(sorted((idx(a, b), idx(a + da, b + db)))) for a in range(4) for b in range(4) for da, db in gens}
    return LabeledGraph.build(16, edges)


def cfi_graph(base: LabeledGraph, twisted: bool) -> LabeledGraph:
    """CFI construction over ``base``; twisting one base edge yields the non-isomorphic partner.

    Each base vertex of degree d becomes 2^(d-1) middle nodes (even subsets of its
    incident edges) plus an a0/a1 node per incident edge.
    """
    nodes: dict = {}

    def node(key) -> int:
        if key not in nodes:
            nodes[key] = len(nodes)
        return nodes[key]

    edges = []
    incident = {v: [e for e in sorted(base.edges) if v in e] for v in range(base.n)}
    for v in range(base.n):
        inc = incident[v]
        for e in inc:
            node(("a", v, e, 0))
            node(("a", v, e, 1))
        for r in range(0, len(inc) + 1, 2):
            for subset in itertools.combinations(inc, r):
                m = node(("m", v, subset))
                for e in inc:
                    edges.append((m, node(("a", v, e, int(e in subset)))))
    twist = sorted(base.edges)[0] if twisted else None
    for e in sorted(base.edges):
        u, w = e
        for bit in (0, 1):
            other = 1 - bit if e == twist else bit
            edges.append((node(("a", u, e, bit)), node(("a", w, e, other))))
    return LabeledGraph.build(len(nodes), edges)


def decalin() -> LabeledGraph:
    """Two fused hexagons sharing the edge (0, 5)."""
    edges = [(i, i + 1) for i in range(9)] + [(0, 5), (9, 0)]
    return LabeledGraph.build(10, edges)


def bicyclopentyl() -> LabeledGraph:
    """Two pentagons joined by the bridge (0, 5)."""
    edges = [(i, (i + 1) % 5) for i in range(5)] + [(5 + i, 5 + (i + 1) % 5) for i in range(5)] + [(0, 5)]
    return LabeledGraph.build(10, edges)


# Verdicts frozen from this package's own engine (see tests/test_pairs.py, which
# re-derives them); the 2-FWL and 3-WL columns must agree.
_EXPECTED = {
    "c6_vs_2c3": {"wl1": "indistinguishable", "wl2": "indistinguishable",
                  "fwl2": "distinguishable", "wl3": "distinguishable"},
    "c8_vs_2c4": {"wl1": "indistinguishable", "wl2": "indistinguishable",
                  "fwl2": "distinguishable", "wl3": "distinguishable"},
    "decalin_vs_bicyclopentyl": {"wl1": "indistinguishable", "wl2": "indistinguishable",
                                 "fwl2": "distinguishable", "wl3": "distinguishable"},
    "p4_vs_star3": {"wl1": "distinguishable", "wl2": "distinguishable",
                    "fwl2": "distinguishable", "wl3": "distinguishable"},
    "rook4_vs_shrikhande": {"wl1": "indistinguishable", "wl2": "indistinguishable",
                            "fwl2": "indistinguishable", "wl3": "indistinguishable"},
    "cfi_k3": {"wl1": "indistinguishable", "wl2": "indistinguishable",
               "fwl2": "distinguishable", "wl3": "distinguishable"},
}


def builtin_pairs() -> list[GraphPair]:
    pairs = [
        GraphPair("c6_vs_2c3", cycle(6), disjoint_cycles(3, 2)),
        GraphPair("c8_vs_2c4", cycle(8), disjoint_cycles(4, 2)),
        GraphPair("decalin_vs_bicyclopentyl", decalin(), bicyclopentyl()),
        GraphPair("p4_vs_star3", path(4), star(3)),
        GraphPair("rook4_vs_shrikhande", rook_graph(4), shrikhande_graph()),
        GraphPair("cfi_k3", cfi_graph(complete(3), False), cfi_graph(complete(3), True)),
    ]
    return [GraphPair(p.name, p.g, p.h, dict(_EXPECTED[p.name])) for p in pairs]


def builtin_graphs(max_n: int | None = None) -> dict[str, LabeledGraph]:
    """Every graph appearing in the builtin pairs plus a few small fixtures, keyed by name."""
    out = {
        "k3": complete(3),
        "p3": path(3),
        "c4": cycle(4),
        "p4": path(4),
        "star3": star(3),
        "k4": complete(4),
        "c5": cycle(5),
        "labeled_k3": LabeledGraph.build(3, [(0, 1), (1, 2), (0, 2)], [1, 1, 2]),
        "labeled_p4": LabeledGraph.build(4, [(0, 1), (1, 2), (2, 3)], [0, 1, 1, 0]),
    }
    for p in builtin_pairs():
        out[p.name + ":g"] = p.g
        out[p.name + ":h"] = p.h
    if max_n is not None:
        out = {k: v for k, v in out.items() if v.n <= max_n}
    return out
