import numpy as np
import pytest

from etwl.logic import (
    Relation,
    compose_relations,
    compositions,
    logic_fwl_consistency,
    mother_chain,
    random_family,
    relation_graph,
)


def test_grandmother_chain():
    m = mother_chain(4)
    gm = compose_relations(m, m)
    assert gm.pairs() == {(0, 2), (1, 3)}
    assert compose_relations(gm, m).pairs() == {(0, 3)}


def test_compose_with_empty():
    empty = Relation.from_pairs("none", 4, [])
    assert compose_relations(mother_chain(4), empty).pairs() == set()


def test_universe_mismatch():
    with pytest.raises(ValueError, match="universe"):
        compose_relations(mother_chain(3), mother_chain(4))


def test_converse():
    assert mother_chain(3).converse().pairs() == {(1, 0), (2, 1)}


def test_composition_associative():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        r, s, t = (Relation(f"r{i}", rng.random((n, n)) < 0.4) for i in range(3))
        left = compose_relations(compose_relations(r, s), t)
        right = compose_relations(r, compose_relations(s, t))
        assert left == right


def test_compositions_depths():
    m = mother_chain(5)
    found = compositions([m], 2)
    assert found[m] == 0
    assert found[compose_relations(m, m)] == 1
    assert found[compose_relations(compose_relations(m, m), compose_relations(m, m))] == 2


def test_relation_graph_features():
    g = relation_graph([mother_chain(3)])
    assert g.edge_feature(0, 1) == (1.0, 0.0)
    assert g.edge_feature(1, 0) == (0.0, 1.0)
    assert not g.has_edge(0, 2)


def test_chain_consistency():
    m = mother_chain(6)
    g = relation_graph([m])
    gm = compose_relations(m, m)
    ggm = compose_relations(gm, m)
    assert logic_fwl_consistency(g, gm, 1)
    assert logic_fwl_consistency(g, ggm, 2)
    assert not logic_fwl_consistency(g, ggm, 0)


def test_random_families():
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = int(rng.integers(3, 8))
        m = random_family(n, rng)
        g = relation_graph([m])
        for rel, depth in compositions([m], 2).items():
            assert logic_fwl_consistency(g, rel, depth)
