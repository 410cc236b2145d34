"""Property checks tying the ET to folklore 2-WL: color consistency and equivariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import wl
from .graphs import LabeledGraph
from .model import EtParams, forward


@dataclass
class ConsistencyResult:
    per_round: list[float]  # max-norm gap between same-colored pairs, t = 0..L

    @property
    def worst(self) -> float:
        return max(self.per_round, default=0.0)


def fwl_consistency(g: LabeledGraph, params: EtParams) -> ConsistencyResult:
    """For each layer t, the largest ||X_t(u) - X_t(v)||_inf over pairs u, v with equal 2-FWL color at round t."""
    res = forward(g, params, mode="pair")
    coloring = wl.fwl2(g, max_rounds=params.cfg.layers)
    gaps = []
    for t, state in enumerate(res.states):
        col = coloring.at_round(t)
        ref: dict[int, np.ndarray] = {}
        worst = 0.0
        for pair, c in col.items():
            vec = state[pair]
            if c in ref:
                worst = max(worst, float(np.max(np.abs(vec - ref[c]))))
            else:
                ref[c] = vec
        gaps.append(worst)
    return ConsistencyResult(gaps)


def equivariance_error(g: LabeledGraph, params: EtParams, perms: int, rng: np.random.Generator) -> tuple[float, float]:
    """Worst (pair-tensor, graph-readout) deviation over ``perms`` random relabelings."""
    base = forward(g, params, mode="graph-sum")
    pair_err = read_err = 0.0
    for _ in range(perms):
        perm = rng.permutation(g.n)
        other = forward(g.permute(perm.tolist()), params, mode="graph-sum")
        # node v is renamed perm[v], so X'[perm[i], perm[j]] == X[i, j]
        pair_err = max(pair_err, float(np.max(np.abs(other.pairs[np.ix_(perm, perm)] - base.pairs))))
        read_err = max(read_err, float(np.max(np.abs(other.readout - base.readout))))
    return pair_err, read_err
