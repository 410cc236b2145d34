"""Command implementations behind the CLI.  Each returns a :class:`RunReport`."""

from __future__ import annotations

import csv
import io
import json
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, wl
from .checks import equivariance_error, fwl_consistency
from .gradcheck import grad_check
from .graphs import GraphPair, LabeledGraph
from .model import EtConfig, et_layer, init_params
from .oracle import DEFAULT_DIGIT_BUDGET, exact_simulate
from .tensor import default_threads


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: list[dict] = field(default_factory=list)
    ok: bool = True
    seed: int | None = None
    threads: int = 1
    seconds: float = 0.0
    version: str = __version__
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.results:
            keys = list(self.results[0])
            writer = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore")
            writer.writeheader()
            for row in self.results:
                writer.writerow(row)
        return buf.getvalue()

    def write(self, out_dir: str | Path, stem: str | None = None) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{stem or self.command}.json"
        path.write_text(self.to_json())
        return path


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def cmd_wl(g: LabeledGraph, method: str, rounds: int | None = None, source: str = "<graph>") -> tuple[RunReport, wl.Coloring]:
    with _Timer() as tm:
        col = wl.run(method, g, rounds)
    hist = sorted(col.histogram().values(), reverse=True)
    rep = RunReport("wl", {"graph": source, "method": method, "rounds": rounds}, threads=default_threads())
    rep.summary = {"n": g.n, "tuples": len(col.assignment), "rounds": col.round, "stable": col.stable,
                   "classes": col.num_classes(), "class_sizes": hist}
    rep.results = [{"class": i, "size": s} for i, s in enumerate(hist)]
    rep.seconds = tm.seconds
    return rep, col


def cmd_distinguish(pairs: Sequence[GraphPair], methods: Sequence[str]) -> RunReport:
    rep = RunReport("distinguish", {"pairs": [p.name for p in pairs], "methods": list(methods)},
                    threads=default_threads())
    with _Timer() as tm:
        for p in pairs:
            for m in methods:
                verdict = "distinguishable" if wl.distinguishes(m, p) else "indistinguishable"
                expected = p.expected.get(m, "unknown")
                row = {"pair": p.name, "n": p.g.n, "method": m, "verdict": verdict, "expected": expected,
                       "matches": expected in ("unknown", verdict)}
                rep.results.append(row)
                rep.ok &= row["matches"]
    rep.seconds = tm.seconds
    return rep


def cmd_et_check(graphs: dict[str, LabeledGraph], layers: int = 3, seeds: int = 5, tol: float = 1e-6,
                 hidden: int = 8, heads: int = 2, perms: int = 20, equiv_tol: float = 1e-9,
                 max_n: int = 8, seed: int = 0) -> RunReport:
    too_big = [k for k, g in graphs.items() if g.n > max_n]
    if too_big:
        raise ValueError(f"graphs exceed the n <= {max_n} cap: {too_big}")
    rep = RunReport("et-check", {"graphs": sorted(graphs), "layers": layers, "seeds": seeds, "tol": tol,
                                 "hidden": hidden, "heads": heads, "perms": perms}, seed=seed,
                    threads=default_threads())
    labels = sorted({lab for g in graphs.values() for lab in g.labels}) or [0]
    rng = np.random.default_rng(seed)
    with _Timer() as tm:
        for name, g in sorted(graphs.items()):
            for s in range(seeds):
                cfg = EtConfig(layers=layers, hidden=hidden, heads=heads, label_alphabet=tuple(labels),
                               seed=seed + s)
                params = init_params(cfg)
                cons = fwl_consistency(g, params)
                pair_err, read_err = equivariance_error(g, params, perms, rng) if perms else (0.0, 0.0)
                row = {"graph": name, "n": g.n, "seed": seed + s,
                       "max_violation": cons.worst, "per_round": cons.per_round,
                       "equivariance": pair_err, "readout_invariance": read_err}
                row["passed"] = cons.worst < tol and pair_err < equiv_tol and read_err < equiv_tol
                rep.ok &= row["passed"]
                rep.results.append(row)
    rep.seconds = tm.seconds
    rep.summary = {"worst_violation": max((r["max_violation"] for r in rep.results), default=0.0),
                   "worst_equivariance": max((r["equivariance"] for r in rep.results), default=0.0)}
    return rep


def cmd_grad_check(n: int = 3, d: int = 4, heads: int = 2, seed: int = 0, tol: float = 1e-4) -> RunReport:
    if n > 5 or d > 16:
        raise ValueError("grad-check is limited to n <= 5 and d <= 16")
    rep = RunReport("grad-check", {"n": n, "d": d, "heads": heads, "tol": tol}, seed=seed, threads=default_threads())
    with _Timer() as tm:
        res = grad_check(n, d, heads, seed)
    rep.results = [{"param": k, "max_rel_err": v} for k, v in sorted(res.per_param.items())]
    rep.summary = {"max_rel_err": res.max_rel_err, "max_abs_err": res.max_abs_err,
                   "entries": res.n_checked, "finite": res.all_finite}
    rep.ok = res.passed(tol)
    rep.seconds = tm.seconds
    return rep


def scaling_exponent(sizes: Sequence[int], times: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


def cmd_bench(sizes: Sequence[int], d: int = 16, heads: int = 2, repeats: int = 3, seed: int = 0,
              threads: int | None = None) -> RunReport:
    if list(sizes) != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be strictly ascending")
    threads = default_threads() if threads is None else threads
    rep = RunReport("bench", {"sizes": list(sizes), "d": d, "heads": heads, "repeats": repeats},
                    seed=seed, threads=threads)
    params = init_params(EtConfig(layers=1, hidden=d, heads=heads, seed=seed))
    rng = np.random.default_rng(seed)
    medians = []
    with _Timer() as tm:
        for n in sizes:
            try:
                x = rng.standard_normal((n, n, d))
                et_layer(x, params, 0, threads)  # warm-up
                runs = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    et_layer(x, params, 0, threads)
                    runs.append(time.perf_counter() - t0)
            except MemoryError:
                rep.ok = False
                rep.summary["failed_size"] = n
                rep.results.append({"n": n, "median_s": None, "min_s": None, "max_s": None, "error": "allocation failed"})
                break
            med = statistics.median(runs)
            medians.append(med)
            rep.results.append({"n": n, "median_s": med, "min_s": min(runs), "max_s": max(runs),
                                "spread": (max(runs) - min(runs)) / med if med else 0.0})
    rep.seconds = tm.seconds
    if len(medians) >= 2:
        rep.summary["exponent"] = scaling_exponent(sizes[:len(medians)], medians)
        rep.summary["ratio_first_pair"] = medians[1] / medians[0]
    rep.summary["machine"] = platform.machine()
    return rep


def cmd_oracle(g: LabeledGraph, rounds: int = 2, digit_budget: int = DEFAULT_DIGIT_BUDGET,
               source: str = "<graph>"):
    rep = RunReport("oracle", {"graph": source, "rounds": rounds, "digit_budget": digit_budget},
                    threads=default_threads())
    with _Timer() as tm:
        trace = exact_simulate(g, rounds, digit_budget)
    ref = wl.fwl2(g, max_rounds=rounds)
    for st in trace.rounds:
        rep.results.append({"round": st.round, "classes": st.num_classes(),
                            "fwl2_classes": len(set(ref.at_round(st.round).values())),
                            "max_denominator_digits": st.max_denominator_digits()})
    rep.summary = {"n": g.n, "base": trace.base, "span": trace.span, "partitions_equal": True}
    rep.seconds = tm.seconds
    return rep, trace

