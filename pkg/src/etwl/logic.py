"""Relation composition over family trees and its agreement with 2-FWL colors.

A relation composed from the base relations at nesting depth t is definable with
three variables and quantifier depth t, so pairs that folklore 2-WL cannot tell
apart after t rounds must agree on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import wl
from .graphs import LabeledGraph


@dataclass(frozen=True)
class Relation:
    name: str
    matrix: np.ndarray  # bool, matrix[x, y] == R(x, y)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("relation matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def pairs(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in zip(*np.nonzero(self.matrix))}

    def converse(self) -> "Relation":
        return Relation(f"{self.name}^-1", self.matrix.T)

    def __eq__(self, other) -> bool:
        return isinstance(other, Relation) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    @classmethod
    def from_pairs(cls, name: str, n: int, pairs) -> "Relation":
        m = np.zeros((n, n), dtype=bool)
        for x, y in pairs:
            m[x, y] = True
        return cls(name, m)


def compose_relations(r: Relation, s: Relation, name: str | None = None) -> Relation:
    """(r ; s)(x, z) = exists y. r(x, y) and s(y, z)."""
    if r.n != s.n:
        raise ValueError(f"universe mismatch: {r.n} != {s.n}")
    prod = r.matrix.astype(np.int64) @ s.matrix.astype(np.int64)
    return Relation(name or f"({r.name};{s.name})", prod > 0)


def relation_graph(relations: Sequence[Relation]) -> LabeledGraph:
    """Undirected graph over the union of the relations; edge features record direction.

    Feature of ordered pair (x, y) holds [R(x, y), R(y, x)] for each relation R.
    """
    n = relations[0].n
    if any(r.n != n for r in relations):
        raise ValueError("relations live on different universes")
    edges = set()
    feats = {}
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            vec = []
            for r in relations:
                vec += [float(r.matrix[x, y]), float(r.matrix[y, x])]
            if any(vec):
                edges.add((min(x, y), max(x, y)))
                feats[(x, y)] = vec
    return LabeledGraph.build(n, edges, [0] * n, feats or None)


def logic_fwl_consistency(g: LabeledGraph, target: Relation, t: int) -> bool:
    """True iff pairs sharing a 2-FWL color after t rounds agree on membership in ``target``."""
    if target.n != g.n:
        raise ValueError("target relation lives on a different universe")
    colors = wl.fwl2(g, max_rounds=t).assignment
    verdict: dict[int, bool] = {}
    for pair, c in colors.items():
        member = bool(target.matrix[pair])
        if verdict.setdefault(c, member) != member:
            return False
    return True


def mother_chain(n: int) -> Relation:
    """mother(x, x + 1): node x + 1 is the mother of node x."""
    return Relation.from_pairs("mother", n, [(x, x + 1) for x in range(n - 1)])


def random_family(n: int, rng: np.random.Generator, p_mother: float = 0.8) -> Relation:
    """Random family forest: each x may get one mother among the nodes after it."""
    pairs = []
    for x in range(n - 1):
        if rng.random() < p_mother:
            pairs.append((x, int(rng.integers(x + 1, n))))
    return Relation.from_pairs("mother", n, pairs)


def compositions(atoms: Sequence[Relation], depth: int) -> dict[Relation, int]:
    """Every relation reachable by composing atoms, with its minimal nesting depth (atoms have depth 0).

    compose(r, s) has depth max(depth r, depth s) + 1, the quantifier depth of
    exists y (r(x, y) and s(y, z)).
    """
    found: dict[Relation, int] = {}
    for a in atoms:
        found.setdefault(a, 0)
    for level in range(1, depth + 1):
        current = list(found.items())
        for r, dr in current:
            for s, ds in current:
                if max(dr, ds) + 1 == level:
                    c = compose_relations(r, s)
                    found.setdefault(c, level)
    return found
