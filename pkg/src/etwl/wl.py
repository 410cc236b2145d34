"""Exact Weisfeiler-Leman colorings: 1-WL, oblivious k-WL (k = 2, 3) and folklore 2-WL.

Colors come from a :class:`RecolorTable` that stores the full structured key for
every color id, so the recoloring is invertible.  Ids are handed out in
first-seen order while tuples are visited lexicographically, which makes runs
reproducible without hashing.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from .graphs import GraphPair, LabeledGraph, atomic_type

TUPLE_BUDGET = 10 ** 6

METHODS = ("wl1", "wl2", "fwl2", "wl3")


class BudgetExceeded(ValueError):
    pass


class RecolorTable:
    """Bijection between structured keys and color ids."""

    def __init__(self):
        self._ids: dict[Hashable, int] = {}
        self._keys: list[Hashable] = []

    def color(self, key: Hashable) -> int:
        cid = self._ids.get(key)
        if cid is None:
            cid = len(self._keys)
            self._ids[key] = cid
            self._keys.append(key)
        return cid

    def key(self, cid: int) -> Hashable:
        return self._keys[cid]

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key) -> bool:
        return key in self._ids


@dataclass
class Coloring:
    k: int
    assignment: dict[tuple[int, ...], int]
    round: int
    history: list[dict[tuple[int, ...], int]] = field(default_factory=list)
    stable: bool = False

    def classes(self) -> list[list[tuple[int, ...]]]:
        groups: dict[int, list] = {}
        for tup in sorted(self.assignment):
            groups.setdefault(self.assignment[tup], []).append(tup)
        return list(groups.values())

    def partition(self) -> frozenset:
        return partition_of(self.assignment)

    def histogram(self) -> Counter:
        return Counter(self.assignment.values())

    def num_classes(self) -> int:
        return len(set(self.assignment.values()))

    def at_round(self, t: int) -> dict[tuple[int, ...], int]:
        """Assignment after ``t`` rounds; rounds past stability repeat the stable partition."""
        if not self.history:
            raise ValueError("coloring was computed without history")
        return self.history[min(t, len(self.history) - 1)]

    def to_dict(self) -> dict:
        return {"k": self.k, "round": self.round, "classes": [[list(t) for t in c] for c in self.classes()]}


def partition_of(assignment: dict) -> frozenset:
    groups: dict[int, list] = {}
    for tup, c in assignment.items():
        groups.setdefault(c, []).append(tup)
    return frozenset(frozenset(v) for v in groups.values())


def refines(fine: dict, coarse: dict) -> bool:
    """True iff every class of ``fine`` lies inside a class of ``coarse`` (same key set)."""
    seen: dict[int, int] = {}
    for tup, c in fine.items():
        if seen.setdefault(c, coarse[tup]) != coarse[tup]:
            return False
    return True


# --- per-variant machinery ------------------------------------------------

def _tuples(n: int, k: int):
    return list(itertools.product(range(n), repeat=k))


def _initial_key(g: LabeledGraph, tup: tuple, k: int):
    if k == 1:
        return ("label", g.labels[tup[0]])
    return ("atp", atomic_type(g, tup))


def _wl1_key(g: LabeledGraph, tup: tuple, col: dict):
    v = tup[0]
    return (col[tup], tuple(sorted(col[(u,)] for u in g.neighbors(v))))


def _fwl2_key(g: LabeledGraph, tup: tuple, col: dict):
    i, j = tup
    return (col[tup], tuple(sorted((col[(i, l)], col[(l, j)]) for l in range(g.n))))


def _kwl_key(g: LabeledGraph, tup: tuple, col: dict):
    k = len(tup)
    per_position = []
    for pos in range(k):
        lst = list(tup)
        ms = []
        for w in range(g.n):
            lst[pos] = w
            ms.append(col[tuple(lst)])
        per_position.append(tuple(sorted(ms)))
    return (col[tup], tuple(per_position))


_UPDATES = {"wl1": (1, _wl1_key), "wl2": (2, _kwl_key), "fwl2": (2, _fwl2_key), "wl3": (3, _kwl_key)}


def _arity(method: str) -> int:
    if method not in _UPDATES:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return _UPDATES[method][0]


def run_parallel(method: str, graphs: Sequence[LabeledGraph], max_rounds: int | None = None,
                 table: RecolorTable | None = None) -> list[Coloring]:
    """Run ``method`` on all ``graphs`` simultaneously with one shared recolor table.

    Iteration stops once the joint partition over all graphs stops splitting or
    after ``max_rounds`` rounds.  Each returned coloring keeps its full history.
    """
    k = _arity(method)
    update = _UPDATES[method][1]
    table = table if table is not None else RecolorTable()
    tuple_sets = []
    for g in graphs:
        if g.n ** k > TUPLE_BUDGET:
            raise BudgetExceeded(f"{method} on n={g.n} needs {g.n ** k} tuples (budget {TUPLE_BUDGET})")
        tuple_sets.append(_tuples(g.n, k))
    if max_rounds is None:
        max_rounds = max((g.n ** k for g in graphs), default=1)
    if max_rounds < 0:
        raise ValueError("max_rounds must be non-negative")

    cols = [{t: table.color(_initial_key(g, t, k)) for t in ts} for g, ts in zip(graphs, tuple_sets)]
    histories = [[c] for c in cols]
    n_classes = len({c for col in cols for c in col.values()})
    rounds = 0
    stable = False
    while rounds < max_rounds:
        new = [{t: table.color(update(g, t, col)) for t in ts} for g, ts, col in zip(graphs, tuple_sets, cols)]
        new_classes = len({c for col in new for c in col.values()})
        # New colors refine old ones, so an unchanged class count means an unchanged partition.
        if new_classes == n_classes:
            stable = True
            break
        cols, n_classes = new, new_classes
        rounds += 1
        for h, c in zip(histories, cols):
            h.append(c)
    return [Coloring(k, col, rounds, hist, stable) for col, hist in zip(cols, histories)]


def run(method: str, g: LabeledGraph, max_rounds: int | None = None) -> Coloring:
    return run_parallel(method, [g], max_rounds)[0]


def wl1(g: LabeledGraph, max_rounds: int | None = None) -> Coloring:
    return run("wl1", g, max_rounds)


def fwl2(g: LabeledGraph, max_rounds: int | None = None) -> Coloring:
    return run("fwl2", g, max_rounds)


def kwl(g: LabeledGraph, k: int, max_rounds: int | None = None) -> Coloring:
    if k not in (2, 3):
        raise ValueError("k-WL is implemented for k in {2, 3}")
    return run(f"wl{k}", g, max_rounds)


def fwl2_at(g: LabeledGraph, t: int) -> dict[tuple[int, int], int]:
    """Folklore 2-WL assignment after exactly ``t`` rounds (or the stable one if reached earlier)."""
    return fwl2(g, max_rounds=t).assignment


def distinguishes(method: str, pair: GraphPair | tuple[LabeledGraph, LabeledGraph],
                  max_rounds: int | None = None) -> bool:
    g, h = (pair.g, pair.h) if isinstance(pair, GraphPair) else pair
    if g.n != h.n:
        raise ValueError("pair graphs must have the same order")
    cg, ch = run_parallel(method, [g, h], max_rounds)
    return cg.histogram() != ch.histogram()
