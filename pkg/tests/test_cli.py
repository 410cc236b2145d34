import csv
import json

import pytest

from etwl.cli import main
from etwl.graphs import builtin_pairs, complete, cycle, disjoint_cycles, dump_graph, path


@pytest.fixture
def gfile(tmp_path):
    def write(g, name="g.json"):
        p = tmp_path / name
        p.write_text(dump_graph(g))
        return str(p)
    return write


def test_wl_c6_fwl2_json(gfile, capsys):
    assert main(["wl", gfile(cycle(6)), "--method", "fwl2", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["tuples"] == 36
    assert doc["command"] == "wl" and doc["ok"]


def test_wl_k3_one_class_and_dump(gfile, tmp_path, capsys):
    out = tmp_path / "col.json"
    assert main(["wl", gfile(complete(3)), "--method", "wl1", "--dump", str(out)]) == 0
    assert "classes: 1" in capsys.readouterr().out
    assert len(json.loads(out.read_text())["classes"]) == 1


def test_bad_graph_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "edges": [[0, 0]]}')
    assert main(["wl", str(bad)]) == 2
    assert "self-loop" in capsys.readouterr().err
    assert main(["wl", str(tmp_path / "missing.json")]) == 2


def test_distinguish_builtin_matches_frozen(tmp_path, capsys):
    out_csv = tmp_path / "d.csv"
    assert main(["distinguish", "--builtin", "--method", "all", "--csv", str(out_csv)]) == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 4 * len(builtin_pairs())
    assert all(r["matches"] == "True" for r in rows)


def test_distinguish_pair_file(tmp_path, capsys):
    pf = tmp_path / "pair.json"
    pf.write_text(json.dumps({"name": "c6", "g": cycle(6).to_dict(), "h": disjoint_cycles(3, 2).to_dict(),
                              "expected": {"wl1": "distinguishable"}}))
    # the stored expectation is wrong on purpose, so the sweep reports a failure
    assert main(["distinguish", str(pf), "--method", "wl1"]) == 1
    assert main(["distinguish", str(pf), "--method", "fwl2"]) == 0
    assert main(["distinguish"]) == 2


def test_et_check_small(gfile, tmp_path, capsys):
    rc = main(["et-check", gfile(path(4)), "--layers", "2", "--seeds", "2", "--perms", "3",
               "--out", str(tmp_path / "art")])
    assert rc == 0
    doc = json.loads((tmp_path / "art" / "et-check.json").read_text())
    assert len(doc["results"]) == 2 and doc["summary"]["worst_violation"] < 1e-6


def test_et_check_size_cap(gfile):
    assert main(["et-check", gfile(cycle(9))]) == 2


def test_grad_check_deterministic(capsys):
    outs = []
    for _ in range(2):
        assert main(["grad-check", "--seed", "1", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        outs.append(doc["summary"]["max_rel_err"])
    assert outs[0] == outs[1] < 1e-4
    assert main(["grad-check", "--n", "9"]) == 2


def test_oracle_runs(gfile, tmp_path, capsys):
    trace = tmp_path / "t.json"
    assert main(["oracle", gfile(path(3)), "--rounds", "2", "--dump", str(trace)]) == 0
    assert "round 2" in capsys.readouterr().out
    assert len(json.loads(trace.read_text())["rounds"]) == 3
    assert main(["oracle", gfile(complete(3)), "--rounds", "1"]) == 0


def test_oracle_budget_refusal(gfile, capsys):
    assert main(["oracle", gfile(cycle(12))]) == 2
    assert "digits" in capsys.readouterr().err


def test_bench_tiny(tmp_path, capsys):
    out_csv = tmp_path / "b.csv"
    assert main(["bench", "--sizes", "4,8", "--d", "4", "--repeats", "1", "--csv", str(out_csv),
                 "--threads", "1"]) in (0, 1)
    rows = list(csv.DictReader(out_csv.open()))
    assert [int(r["n"]) for r in rows] == [4, 8]
    assert main(["bench", "--sizes", "8,4"]) == 2
