"""Re-derives the frozen verdicts stored with the builtin pair library."""

import pytest

from etwl import wl
from etwl.graphs import BRUTE_FORCE_CAP, brute_force_isomorphic, builtin_pairs

PAIRS = {p.name: p for p in builtin_pairs()}


def test_required_pairs_present():
    assert {"c6_vs_2c3", "rook4_vs_shrikhande", "cfi_k3"} <= set(PAIRS)


def test_c6_pair_one_class_each_under_wl1():
    a, b = wl.run_parallel("wl1", [PAIRS["c6_vs_2c3"].g, PAIRS["c6_vs_2c3"].h])
    assert a.num_classes() == b.num_classes() == 1
    assert a.histogram() == b.histogram()


def test_rook_and_shrikhande_are_srg_16_6_2_2():
    for g in (PAIRS["rook4_vs_shrikhande"].g, PAIRS["rook4_vs_shrikhande"].h):
        assert g.n == 16
        assert {g.degree(v) for v in range(16)} == {6}
        for i in range(16):
            for j in range(i + 1, 16):
                common = len(set(g.neighbors(i)) & set(g.neighbors(j)))
                assert common == 2


@pytest.mark.parametrize("name", sorted(PAIRS))
def test_pairs_non_isomorphic(name):
    p = PAIRS[name]
    if p.g.n <= BRUTE_FORCE_CAP:
        assert not brute_force_isomorphic(p.g, p.h)
    else:
        # Larger pairs are non-isomorphic by construction; 2-FWL already separates most.
        assert p.g != p.h


@pytest.mark.parametrize("name", sorted(PAIRS))
@pytest.mark.parametrize("method", wl.METHODS)
def test_frozen_verdicts(name, method):
    p = PAIRS[name]
    verdict = "distinguishable" if wl.distinguishes(method, p) else "indistinguishable"
    assert p.expected[method] == verdict


def test_hierarchy_on_builtin_pairs():
    for p in PAIRS.values():
        if wl.distinguishes("wl1", p):
            assert wl.distinguishes("fwl2", p)
        if wl.distinguishes("wl2", p):
            assert wl.distinguishes("fwl2", p)
        assert wl.distinguishes("wl3", p) == wl.distinguishes("fwl2", p)
