"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import itertools
import time
from collections import defaultdict
from itertools import combinations_with_replacement

import numpy as np

from etwl import tensor as T
from etwl import wl
from etwl.checks import equivariance_error, fwl_consistency
from etwl.gradcheck import grad_check
from etwl.graphs import builtin_graphs, builtin_pairs
from etwl.harness import cmd_bench
from etwl.logic import compose_relations, logic_fwl_consistency, mother_chain, random_family, relation_graph
from etwl.model import EtConfig, init_params
from etwl.oracle import MaryCode, check_nonoverlap_addition, encode_multiset, exact_simulate, exact_simulate_parallel

RESULTS: list[str] = []


def record(num: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {detail}"
    RESULTS.append(line)
    print(line)


def _labels(g):
    return tuple(sorted(set(g.labels)))


def test_01_fwl_consistency():
    t0 = time.perf_counter()
    graphs = builtin_graphs(max_n=8)
    worst, runs, violations = 0.0, 0, 0
    for name, g in graphs.items():
        for seed in range(5):
            for layers in (1, 2, 3):
                cfg = EtConfig(layers=layers, hidden=8, heads=2, seed=seed, label_alphabet=_labels(g))
                gap = fwl_consistency(g, init_params(cfg)).worst
                worst = max(worst, gap)
                violations += gap >= 1e-6
                runs += 1
    secs = time.perf_counter() - t0
    ok = violations == 0 and secs < 60
    record(1, ok, f"{len(graphs)} graphs x 5 seeds x L in 1..3 ({runs} runs), "
                  f"violations={violations}, worst gap {worst:.1e}, {secs:.1f}s")
    assert ok


def test_02_exact_simulation():
    t0 = time.perf_counter()
    graphs = builtin_graphs(max_n=5)
    checked = 0
    for g in graphs.values():
        exact_simulate(g, 2)  # raises PartitionMismatch on any disagreement
        checked += 1
    by_n = defaultdict(list)
    for g in graphs.values():
        by_n[g.n].append(g)
    for same in by_n.values():
        for a, b in itertools.combinations(same, 2):
            exact_simulate_parallel([a, b], 2)
            checked += 1
    secs = time.perf_counter() - t0
    ok = secs < 120
    record(2, ok, f"{checked} single and joint runs, rounds 0..2, partitions equal, {secs:.1f}s")
    assert ok


def test_03_multiset_encoding():
    t0 = time.perf_counter()
    total = 0
    bad = []
    for m in range(2, 8):
        for alpha in range(1, 7):
            seen = {}
            for order in range(m):
                for ms in combinations_with_replacement(range(1, alpha + 1), order):
                    v = encode_multiset(ms, m, alphabet_size=alpha).value
                    if v in seen:
                        bad.append((m, alpha, ms, seen[v]))
                    seen[v] = ms
                    total += 1
    secs = time.perf_counter() - t0
    ok = not bad and secs < 10
    record(3, ok, f"{total} multisets over bases 2..7 and alphabets 1..6, collisions={len(bad)}, {secs:.1f}s")
    assert ok


def conforming_sets(rng):
    """A uses digit positions 1..l (at least one nonzero), B only positions l+1..l+r."""
    m = int(rng.integers(2, 11))
    l, r = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    a, b = set(), set()
    for _ in range(int(rng.integers(1, 9))):
        digits = {i: int(rng.integers(0, m)) for i in range(1, l + 1)}
        if not any(digits.values()):
            digits[int(rng.integers(1, l + 1))] = int(rng.integers(1, m))
        a.add(MaryCode.from_digits(digits, m))
    for _ in range(int(rng.integers(1, 9))):
        b.add(MaryCode.from_digits({i: int(rng.integers(0, m)) for i in range(l + 1, l + r + 1)}, m))
    return sorted(a), sorted(b)


def test_04_nonoverlap_addition():
    rng = np.random.default_rng(2024)
    statuses = defaultdict(int)
    for _ in range(100):
        a, b = conforming_sets(rng)
        statuses[check_nonoverlap_addition(a, b).status] += 1
    ok = statuses["unique"] == 100
    record(4, ok, f"100 conforming (A, B) pairs: {dict(statuses)}")
    assert ok


def test_05_hierarchy_table():
    pairs = {p.name: p for p in builtin_pairs()}
    table = {name: {m: wl.distinguishes(m, p) for m in wl.METHODS} for name, p in pairs.items()}
    c6 = table["c6_vs_2c3"]
    rook = table["rook4_vs_shrikhande"]
    frozen_ok = all(pairs[n].expected[m] == ("distinguishable" if v else "indistinguishable")
                    for n, row in table.items() for m, v in row.items())
    ok = (not c6["wl1"] and c6["fwl2"] and not rook["wl2"] and frozen_ok
          and all(row["wl3"] == row["fwl2"] for row in table.values()))
    cells = "; ".join(f"{n}: " + (",".join(m for m in wl.METHODS if row[m]) or "none") for n, row in sorted(table.items()))
    record(5, ok, f"distinguished by -> {cells}")
    assert ok


def test_06_gradients():
    errs = [grad_check(n=3, d=4, heads=2, seed=s, h=1e-5) for s in range(3)]
    worst = max(r.max_rel_err for r in errs)
    ok = all(r.passed(1e-4) for r in errs)
    record(6, ok, f"3 seeds, max relative error {worst:.2e}, {sum(r.n_checked for r in errs)} entries")
    assert ok


def test_07_equivariance():
    rng = np.random.default_rng(7)
    graphs = builtin_graphs()
    pair_worst = read_worst = 0.0
    for g in graphs.values():
        params = init_params(EtConfig(layers=2, hidden=8, heads=2, label_alphabet=_labels(g)))
        pe, re = equivariance_error(g, params, 20, rng)
        pair_worst, read_worst = max(pair_worst, pe), max(read_worst, re)
    ok = pair_worst < 1e-9 and read_worst < 1e-9
    record(7, ok, f"{len(graphs)} graphs x 20 perms, pair {pair_worst:.1e}, readout {read_worst:.1e}")
    assert ok


def test_08_cubic_scaling():
    rep = cmd_bench([50, 100, 150, 200], d=16, heads=2, repeats=3)
    exp = rep.summary.get("exponent", float("nan"))
    ratio = rep.summary.get("ratio_first_pair", float("nan"))
    ok = rep.ok and 2.6 <= exp <= 3.4 and 5 <= ratio <= 12 and rep.seconds < 300
    record(8, ok, f"exponent {exp:.2f}, n=100/n=50 ratio {ratio:.2f}, threads={rep.threads}, {rep.seconds:.1f}s")
    assert ok


def test_09_logic():
    def check(m):
        g = relation_graph([m])
        gm = compose_relations(m, m)
        return logic_fwl_consistency(g, gm, 1) and logic_fwl_consistency(g, compose_relations(gm, m), 2)

    rng = np.random.default_rng(9)
    chain_ok = check(mother_chain(4))
    fams = [random_family(int(rng.integers(3, 8)), rng) for _ in range(25)]
    fails = sum(not check(m) for m in fams)
    ok = chain_ok and fails == 0
    record(9, ok, f"chain {'ok' if chain_ok else 'failed'}, random families failed {fails}/25")
    assert ok


def _naive_scores(q, k):
    n, _, d = q.shape
    out = np.zeros((n, n, n))
    for i, l, j in itertools.product(range(n), repeat=3):
        s = 0.0
        for c in range(d):
            s += q[i, l, c] * k[l, j, c]
        out[i, l, j] = s
    return out


def _naive_values(a, v):
    n, d = a.shape[0], v.shape[3]
    out = np.zeros((n, n, d))
    for i, j, c in itertools.product(range(n), range(n), range(d)):
        s = 0.0
        for l in range(n):
            s += a[i, l, j] * v[i, l, j, c]
        out[i, j, c] = s
    return out


def test_10_kernels():
    rng = np.random.default_rng(10)
    serial_bad = par_worst = 0
    for _ in range(50):
        n, d = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        q, k = rng.standard_normal((2, n, n, d))
        a = rng.random((n, n, n))
        v = rng.standard_normal((n, n, n, d))
        rs, rv = _naive_scores(q, k), _naive_values(a, v)
        serial_bad += not np.array_equal(T.tri_contract_scores(q, k, 1), rs)
        serial_bad += not np.array_equal(T.tri_contract_values(a, v, 1), rv)
        for threads in (2, 3):
            par_worst = max(par_worst, np.abs(T.tri_contract_scores(q, k, threads) - rs).max(),
                            np.abs(T.tri_contract_values(a, v, threads) - rv).max())
    ok = serial_bad == 0 and par_worst <= 1e-12
    record(10, ok, f"50 instances per kernel, serial mismatches={serial_bad}, parallel max diff {par_worst:.1e}")
    assert ok


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                pass
