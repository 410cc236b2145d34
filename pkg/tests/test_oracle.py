import json
from fractions import Fraction
from itertools import combinations_with_replacement

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etwl import wl
from etwl.graphs import atomic_type, builtin_graphs, cycle, path
from etwl.oracle import (
    DigitBudgetExceeded,
    MaryCode,
    check_nonoverlap_addition,
    encode_multiset,
    exact_simulate,
    exact_simulate_parallel,
)


def test_encode_example():
    code = encode_multiset([1, 1, 2], 10)
    assert code.value == Fraction(21, 100)
    assert code.digits == {1: 2, 2: 1}


def test_encode_empty():
    assert encode_multiset([], 5).value == 0


def test_encode_exhaustive_small():
    seen = {}
    for order in range(5):
        for ms in combinations_with_replacement(range(1, 5), order):
            v = encode_multiset(ms, 5, alphabet_size=4).value
            assert v not in seen, (ms, seen.get(v))
            seen[v] = ms
    assert len(seen) == 70  # C(4 + 4, 4)


def test_encode_errors():
    with pytest.raises(ValueError, match="exceeds"):
        encode_multiset([1, 1, 1], 3)
    with pytest.raises(ValueError, match="alphabet"):
        encode_multiset([5], 6, alphabet_size=4)
    with pytest.raises(ValueError):
        encode_multiset([0], 6)
    with pytest.raises(ValueError):
        encode_multiset([], 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 9).flatmap(lambda m: st.tuples(
    st.just(m), st.lists(st.integers(1, 6), max_size=m - 1), st.lists(st.integers(1, 6), max_size=m - 1))))
def test_encode_injective_property(args):
    m, a, b = args
    same = sorted(a) == sorted(b)
    assert (encode_multiset(a, m).value == encode_multiset(b, m).value) == same


def test_mary_code_checks_digits():
    with pytest.raises(ValueError):
        MaryCode(Fraction(1, 2), 2, {1: 2})
    with pytest.raises(ValueError):
        MaryCode(Fraction(1, 3), 2, {1: 1})
    assert MaryCode.from_digits({1: 1, 3: 0}, 2).digits == {1: 1}


def test_nonoverlap_examples():
    a = [Fraction(1, 10), Fraction(2, 10)]
    b = [Fraction(1, 100), Fraction(2, 100)]
    res = check_nonoverlap_addition(a, b)
    assert res.status == "unique" and res.distinct_sums == 4
    assert check_nonoverlap_addition(a, []).status == "unique"
    assert check_nonoverlap_addition(a, [Fraction(15, 100)]).status == "hypothesis-not-met"


def test_nonoverlap_ordering_alone_is_not_enough():
    res = check_nonoverlap_addition([Fraction(2, 10), Fraction(3, 10)], [Fraction(0), Fraction(1, 10)])
    assert res.hypothesis_met
    assert res.status == "collision"
    assert not res


def test_nonoverlap_with_mary_codes():
    a = [MaryCode.from_digits({1: d}, 10) for d in range(1, 10)]
    b = [MaryCode.from_digits({2: d, 3: e}, 10) for d in range(10) for e in range(10)]
    assert check_nonoverlap_addition(a, b).status == "unique"


# --- exact simulation -----------------------------------------------------

def test_round_zero_is_atomic_type_partition():
    g = builtin_graphs()["labeled_p4"]
    st0 = exact_simulate(g, 0).rounds[0]
    col = st0.colors[0]
    for u in col:
        for v in col:
            assert (col[u] == col[v]) == (atomic_type(g, u) == atomic_type(g, v))


def test_p3_round_one_matches_fwl2():
    trace = exact_simulate(path(3), 1)
    ref = wl.fwl2(path(3), max_rounds=1).assignment
    assert wl.partition_of(trace.rounds[1].colors[0]) == wl.partition_of(ref)


def test_c4_vs_p4_separated_in_round_one():
    trace = exact_simulate_parallel([cycle(4), path(4)], 1)
    last = trace.rounds[1]
    assert last.histogram(0) != last.histogram(1)


@pytest.mark.parametrize("name", ["k3", "p3", "c4", "star3", "labeled_k3", "labeled_p4"])
def test_small_fixtures_track_fwl2(name):
    trace = exact_simulate(builtin_graphs()[name], 2)  # raises on any mismatch
    assert len(trace.rounds) == 3


def test_budget_refusal():
    with pytest.raises(DigitBudgetExceeded):
        exact_simulate(cycle(12), 1)


def test_input_errors():
    with pytest.raises(ValueError):
        exact_simulate_parallel([], 1)
    with pytest.raises(ValueError):
        exact_simulate_parallel([path(3), path(4)], 1)
    with pytest.raises(ValueError):
        exact_simulate(path(3), -1)


def test_trace_json():
    doc = json.loads(exact_simulate(path(3), 1).to_json())
    assert doc["base"] == 3 and len(doc["rounds"]) == 2
    entry = doc["rounds"][1]["pairs"][0]
    assert set(entry) == {"graph", "pair", "color", "value"}
    num, den = map(int, entry["value"].split("/"))
    assert den > 0 and num > 0
