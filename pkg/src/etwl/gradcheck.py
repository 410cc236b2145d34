"""Analytic vs central-difference gradients for the tokenizer and one ET layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .graphs import LabeledGraph
from .model import EtConfig, EtParams, init_params, record_forward

REL_FLOOR = 1e-8


@dataclass
class GradCheckResult:
    max_rel_err: float
    max_abs_err: float
    per_param: dict[str, float]
    n_checked: int
    all_finite: bool

    def passed(self, tol: float = 1e-4) -> bool:
        return self.all_finite and self.max_rel_err < tol


def random_graph(n: int, rng: np.random.Generator, p: float = 0.5, n_labels: int = 2) -> LabeledGraph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return LabeledGraph.build(n, edges, rng.integers(0, n_labels, size=n).tolist())


def _loss(g: LabeledGraph, params: EtParams, weights: np.ndarray):
    tape = T.Tape()
    states, _ = record_forward(g, params, tape, mode="pair")
    loss = T.vdot(states[-1], weights)
    return tape, loss


def grad_check(n: int = 3, d: int = 4, heads: int = 2, seed: int = 0, h: float = 1e-5,
               zero_qk: bool = False, graph: LabeledGraph | None = None) -> GradCheckResult:
    """Compare every parameter gradient of the tokenizer plus one layer with central differences.

    The loss is a fixed random linear functional of the layer output.  Relative
    error is |analytic - numeric| / (|analytic| + 1e-8), elementwise.
    """
    rng = np.random.default_rng(seed)
    cfg = EtConfig(layers=1, hidden=d, heads=heads, edge_dim=3, label_alphabet=(0, 1), readout="pair", seed=seed)
    params = init_params(cfg)
    if zero_qk:
        params.tensors["layer0.wq"][:] = 0.0
        params.tensors["layer0.wk"][:] = 0.0
    g = graph if graph is not None else random_graph(n, rng)
    weights = rng.standard_normal((g.n, g.n, d))

    tape, loss = _loss(g, params, weights)
    grads = T.backward(tape, output=loss)

    per_param = {}
    worst_rel = worst_abs = 0.0
    count = 0
    finite = True
    for name, arr in params.tensors.items():
        if name.startswith("readout."):
            continue
        analytic = grads[name]
        finite &= bool(np.all(np.isfinite(analytic)))
        numeric = np.empty_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            up = float(_loss(g, params, weights)[1].data)
            arr[idx] = orig - h
            down = float(_loss(g, params, weights)[1].data)
            arr[idx] = orig
            numeric[idx] = (up - down) / (2 * h)
        diff = np.abs(analytic - numeric)
        rel = diff / (np.abs(analytic) + REL_FLOOR)
        per_param[name] = float(rel.max()) if rel.size else 0.0
        worst_rel = max(worst_rel, per_param[name])
        worst_abs = max(worst_abs, float(diff.max()) if diff.size else 0.0)
        count += arr.size
    return GradCheckResult(worst_rel, worst_abs, per_param, count, finite)
