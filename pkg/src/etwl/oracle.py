"""Exact-rational simulation of folklore 2-WL by the ET update form.

Colors are encoded as base-m numbers ``m**-f`` (one digit per color).  The
triangular update with uniform attention and value fusion

    T'[j, k] = T[j, k] + (beta / n) * sum_l T[j, l] * T[l, k] ** span

places every ordered color pair at its own digit, so the sum over ``l`` counts the
multiset of color pairs and the leading term keeps the old color in a digit
range of its own.  Instead of approximating the re-encoding with a feed-forward
net, each round maps every distinct aggregate back to ``m**-f`` through a fresh
injective ``f``.  Everything is :class:`fractions.Fraction`, so equality is exact.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import wl
from .graphs import LabeledGraph, atomic_type

DEFAULT_DIGIT_BUDGET = 5000


class DigitBudgetExceeded(ValueError):
    pass


class PartitionMismatch(AssertionError):
    """The exact simulation split tuples differently from folklore 2-WL."""


@dataclass(frozen=True)
class MaryCode:
    value: Fraction
    base: int
    digits: dict[int, int] = field(compare=False)

    def __post_init__(self):
        if any(not 0 <= d < self.base for d in self.digits.values()):
            raise ValueError(f"digit out of range for base {self.base}: {self.digits}")
        if sum((Fraction(d, self.base ** i) for i, d in self.digits.items()), Fraction(0)) != self.value:
            raise ValueError("digits do not reproduce the value")

    def __lt__(self, other: "MaryCode") -> bool:
        return self.value < other.value

    def __add__(self, other: "MaryCode") -> Fraction:
        return self.value + other.value

    @classmethod
    def from_digits(cls, digits: dict[int, int], base: int) -> "MaryCode":
        digits = {i: d for i, d in digits.items() if d}
        return cls(sum((Fraction(d, base ** i) for i, d in digits.items()), Fraction(0)), base, digits)


def encode_multiset(items: Iterable[int], m: int, alphabet_size: int | None = None) -> MaryCode:
    """Sum of m**-i over the multiset of 1-based alphabet positions ``items``."""
    if m < 2:
        raise ValueError("base must be at least 2")
    counts = Counter(items)
    order = sum(counts.values())
    if order > m - 1:
        raise ValueError(f"multiset order {order} exceeds m - 1 = {m - 1}")
    for i in counts:
        if i < 1 or (alphabet_size is not None and i > alphabet_size):
            raise ValueError(f"index {i} outside the alphabet")
    value = sum((Fraction(c, m ** i) for i, c in counts.items()), Fraction(0))
    return MaryCode(value, m, dict(counts))


@dataclass(frozen=True)
class NonOverlapResult:
    status: str  # "unique", "collision" or "hypothesis-not-met"
    distinct_sums: int
    pairs: int

    def __bool__(self) -> bool:
        return self.status != "collision"

    @property
    def hypothesis_met(self) -> bool:
        return self.status != "hypothesis-not-met"


def check_nonoverlap_addition(a: Sequence[MaryCode | Fraction], b: Sequence[MaryCode | Fraction]) -> NonOverlapResult:
    """Exhaustively test whether x + y determines (x, y) over A x B, given min A > max B.

    Note that min A > max B alone does not force disjoint digit ranges (A = {0.2, 0.3},
    B = {0, 0.1} collides); such inputs come back as ``"collision"``.
    """
    av = sorted({x.value if isinstance(x, MaryCode) else Fraction(x) for x in a})
    bv = sorted({y.value if isinstance(y, MaryCode) else Fraction(y) for y in b})
    if av and bv and not av[0] > bv[-1]:
        return NonOverlapResult("hypothesis-not-met", 0, 0)
    sums = {x + y for x in av for y in bv}
    pairs = len(av) * len(bv)
    return NonOverlapResult("unique" if len(sums) == pairs else "collision", len(sums), pairs)


# --- exact simulation -----------------------------------------------------

@dataclass
class RoundState:
    round: int
    codes: list[dict[tuple[int, int], Fraction]]  # per graph: T
    powers: list[dict[tuple[int, int], Fraction]]  # per graph: T ** span
    colors: list[dict[tuple[int, int], int]]  # per graph: f_t
    aggregates: list[dict[tuple[int, int], Fraction]] | None = None

    def num_classes(self) -> int:
        return len({c for col in self.colors for c in col.values()})

    def histogram(self, gi: int = 0) -> Counter:
        return Counter(self.codes[gi].values())

    def max_denominator_digits(self) -> int:
        vals = [v for per in (self.aggregates or self.codes) for v in per.values()]
        return max((len(str(v.denominator)) for v in vals), default=1)


@dataclass
class SimulationTrace:
    n: int
    base: int
    span: int
    rounds: list[RoundState] = field(default_factory=list)

    def to_json(self) -> str:
        out = {"n": self.n, "base": self.base, "span": self.span, "rounds": []}
        for st in self.rounds:
            entries = []
            for gi, (codes, cols) in enumerate(zip(st.codes, st.colors)):
                for pair in sorted(codes):
                    v = codes[pair]
                    entries.append({"graph": gi, "pair": list(pair), "color": cols[pair],
                                    "value": f"{v.numerator}/{v.denominator}"})
            out["rounds"].append({"round": st.round, "classes": st.num_classes(), "pairs": entries})
        return json.dumps(out)


def estimated_digits(n: int, span: int) -> int:
    base = max(n, 2)
    deepest = span + span + span * span
    return int(math.ceil(deepest * math.log10(base))) + 1


def _canonical(values: list[dict], base: int) -> list[dict]:
    """First-seen injective map of the distinct values to 1, 2, ... in lexicographic pair order."""
    ids: dict = {}
    out = []
    for per in values:
        col = {}
        for pair in sorted(per):
            col[pair] = ids.setdefault(per[pair], len(ids) + 1)
        out.append(col)
    return out


def _joint_partition(per_graph: list[dict]) -> frozenset:
    joint = {(gi, pair): c for gi, col in enumerate(per_graph) for pair, c in col.items()}
    return wl.partition_of(joint)


def exact_simulate_parallel(graphs: Sequence[LabeledGraph], rounds: int,
                            digit_budget: int = DEFAULT_DIGIT_BUDGET, check: bool = True) -> SimulationTrace:
    """Run the exact update on several equal-order graphs with one shared color encoding.

    With ``check`` set, the joint partition at every round is compared against
    folklore 2-WL run in parallel on the same graphs; a difference raises
    :class:`PartitionMismatch`.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("all graphs must have the same order")
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    base = max(n, 2)
    span = len(graphs) * n * n  # bound on the number of distinct colors
    need = estimated_digits(n, span)
    if need > digit_budget:
        raise DigitBudgetExceeded(f"n={n} needs ~{need} denominator digits (budget {digit_budget})")

    pairs = [(i, j) for i in range(n) for j in range(n)]
    beta = Fraction(n, base ** span)  # beta / n == base ** -span
    attn = Fraction(1, n) if n else Fraction(0)  # uniform attention when W^Q = W^K = 0

    ref = wl.run_parallel("fwl2", list(graphs), max_rounds=rounds) if check else None

    colors = _canonical([{p: atomic_type(g, p) for p in pairs} for g in graphs], base)
    trace = SimulationTrace(n, base, span)
    aggregates = None
    for t in range(rounds + 1):
        codes = [{p: Fraction(1, base ** c) for p, c in col.items()} for col in colors]
        powers = [{p: v ** span for p, v in code.items()} for code in codes]
        trace.rounds.append(RoundState(t, codes, powers, colors, aggregates))
        if check:
            expected = _joint_partition([c.at_round(t) for c in ref])
            if _joint_partition(colors) != expected:
                raise PartitionMismatch(f"round {t}: exact simulation partition differs from folklore 2-WL")
        if t == rounds:
            break
        aggregates = []
        for code, power in zip(codes, powers):
            agg = {}
            for j, k in pairs:
                fused = sum((beta * code[(j, l)] * power[(l, k)] for l in range(n)), Fraction(0))
                agg[(j, k)] = code[(j, k)] + attn * fused
            aggregates.append(agg)
        colors = _canonical(aggregates, base)
    return trace


def exact_simulate(g: LabeledGraph, rounds: int, digit_budget: int = DEFAULT_DIGIT_BUDGET,
                   check: bool = True) -> SimulationTrace:
    return exact_simulate_parallel([g], rounds, digit_budget, check)
