import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from etwl.graphs import LabeledGraph


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@st.composite
def small_graphs(draw, min_n=1, max_n=6, labels=2):
    n = draw(st.integers(min_n, max_n))
    possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(possible), max_size=len(possible)))
    labs = draw(st.lists(st.integers(0, labels - 1), min_size=n, max_size=n))
    return LabeledGraph.build(n, [e for e, keep in zip(possible, mask) if keep], labs)


@st.composite
def graph_and_perm(draw, **kw):
    g = draw(small_graphs(**kw))
    perm = draw(st.permutations(list(range(g.n))))
    return g, list(perm)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
