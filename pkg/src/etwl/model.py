"""Edge Transformer: pair tokenization, triangular-attention layers and readouts.

Everything is evaluated on a :class:`~etwl.tensor.Tape`, so the same code path
serves inference and gradient checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from . import tensor as T
from .graphs import LabeledGraph

READOUTS = ("pair", "edge", "node-diagonal", "node-sum", "graph-sum", "graph-mean")
ACTIVATIONS = ("gelu", "relu")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EtConfig:
    layers: int = 2
    hidden: int = 16
    heads: int = 2
    ffn_mult: int = 2
    activation: str = "gelu"
    readout: str = "graph-sum"
    rrwp_steps: int = 0
    seed: int = 0
    edge_dim: int = 4
    label_alphabet: tuple[int, ...] = (0, 1, 2, 3)
    ln_eps: float = 1e-5
    # X' = Y + FFN(Y) instead of the literal X' = FFN(Y).
    ffn_residual: bool = False
    # Accepted for config compatibility; inference never drops anything.
    dropout: float = 0.0

    def __post_init__(self):
        if self.layers < 0:
            raise ConfigError("layers must be >= 0")
        if self.hidden < 1 or self.heads < 1 or self.hidden % self.heads:
            raise ConfigError(f"heads ({self.heads}) must divide hidden ({self.hidden})")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout mode {self.readout!r}")
        if self.rrwp_steps < 0:
            raise ConfigError("rrwp_steps must be >= 0")
        if self.edge_dim < 1 or self.ffn_mult < 1:
            raise ConfigError("edge_dim and ffn_mult must be positive")
        if len(set(self.label_alphabet)) != len(self.label_alphabet) or not self.label_alphabet:
            raise ConfigError("label_alphabet must be a non-empty list of distinct labels")
        object.__setattr__(self, "label_alphabet", tuple(int(x) for x in self.label_alphabet))

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    @property
    def token_in(self) -> int:
        return self.edge_dim + 2 * len(self.label_alphabet) + self.rrwp_steps

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EtConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        doc = dict(doc)
        if "label_alphabet" in doc:
            doc["label_alphabet"] = tuple(doc["label_alphabet"])
        return cls(**doc)


@dataclass
class EtParams:
    cfg: EtConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "EtParams":
        return EtParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def to_json(self) -> str:
        return json.dumps({k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                           for k, v in sorted(self.tensors.items())})

    @classmethod
    def from_json(cls, cfg: EtConfig, text: str) -> "EtParams":
        doc = json.loads(text)
        tensors = {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in doc.items()}
        ref = init_params(cfg)
        for k, v in ref.tensors.items():
            if k not in tensors or tensors[k].shape != v.shape:
                raise ConfigError(f"checkpoint tensor {k!r} missing or mis-shaped for this config")
        return cls(cfg, tensors)


def _mlp_shapes(prefix: str, d_in: int, d_hidden: int, d_out: int) -> dict[str, tuple]:
    return {f"{prefix}.w1": (d_in, d_hidden), f"{prefix}.b1": (d_hidden,),
            f"{prefix}.w2": (d_hidden, d_out), f"{prefix}.b2": (d_out,)}


def param_shapes(cfg: EtConfig) -> dict[str, tuple]:
    d, q = cfg.hidden, cfg.edge_dim
    shapes = {"tok.x1": (q,), "tok.x2": (q,)}
    shapes.update(_mlp_shapes("tok.phi", cfg.token_in, d, d))
    for t in range(cfg.layers):
        p = f"layer{t}"
        shapes[f"{p}.ln.gamma"] = (d,)
        shapes[f"{p}.ln.beta"] = (d,)
        for w in ("wq", "wk", "wv1", "wv2", "wo"):
            shapes[f"{p}.{w}"] = (d, d)
        shapes.update(_mlp_shapes(f"{p}.ffn", d, cfg.ffn_mult * d, d))
    shapes.update(_mlp_shapes("readout.rho1", d, d, d))
    shapes.update(_mlp_shapes("readout.rho2", d, d, d))
    return shapes


def init_params(cfg: EtConfig, seed: int | None = None) -> EtParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere except LayerNorm (ones / zeros)."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    tensors = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("ln.gamma"):
            tensors[name] = np.ones(shape)
        elif name.endswith("ln.beta"):
            tensors[name] = np.zeros(shape)
        else:
            if name.endswith((".b1", ".b2")):
                fan_in = param_shapes(cfg)[name[:-2] + "w" + name[-1]][0]
            else:
                fan_in = shape[0]
            bound = 1.0 / math.sqrt(fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return EtParams(cfg, tensors)


# --- positional features --------------------------------------------------

def rrwp(g: LabeledGraph, steps: int) -> np.ndarray:
    """n x n x steps stack: slice 0 is I, slice s is (D^-1 A)^s; isolated rows of D^-1 A are zero."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    a = g.adjacency()
    deg = a.sum(axis=1)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    walk = a * inv[:, None]
    out = np.empty((g.n, g.n, steps))
    cur = np.eye(g.n)
    for s in range(steps):
        out[:, :, s] = cur
        cur = cur @ walk
    return out


# --- tokenization ---------------------------------------------------------

def _node_onehot(g: LabeledGraph, cfg: EtConfig) -> np.ndarray:
    pos = {lab: i for i, lab in enumerate(cfg.label_alphabet)}
    f = np.zeros((g.n, len(pos)))
    for v, lab in enumerate(g.labels):
        if lab not in pos:
            raise ConfigError(f"node {v} has label {lab} outside the configured alphabet {cfg.label_alphabet}")
        f[v, pos[lab]] = 1.0
    return f


def _edge_masks(g: LabeledGraph, cfg: EtConfig):
    """Masks selecting x1 (edges without explicit features) and x2 (diagonal), plus explicit features."""
    n, q = g.n, cfg.edge_dim
    if g.edge_features and g.feature_width != q:
        raise ConfigError(f"graph edge features have width {g.feature_width}, config edge_dim is {q}")
    m1 = np.zeros((n, n, 1))
    m2 = np.zeros((n, n, 1))
    explicit = np.zeros((n, n, q))
    for i, j in g.edges:
        for a, b in ((i, j), (j, i)):
            feat = g.edge_feature(a, b)
            if feat is None:
                m1[a, b] = 1.0
            else:
                explicit[a, b] = feat
    for i in range(n):
        m2[i, i] = 1.0
    return m1, m2, explicit


def _mlp(x: T.Var, tape_params: Mapping[str, T.Var], prefix: str, act: str) -> T.Var:
    h = T.add(T.matmul(x, tape_params[f"{prefix}.w1"]), tape_params[f"{prefix}.b1"])
    h = T.gelu_var(h) if act == "gelu" else T.relu_var(h)
    return T.add(T.matmul(h, tape_params[f"{prefix}.w2"]), tape_params[f"{prefix}.b2"])


def tokenize_tape(g: LabeledGraph, cfg: EtConfig, tp: Mapping[str, T.Var], tape: T.Tape) -> T.Var:
    m1, m2, explicit = _edge_masks(g, cfg)
    e = T.add(T.add(T.mul(tape.const(m1), tp["tok.x1"]), T.mul(tape.const(m2), tp["tok.x2"])), tape.const(explicit))
    f = _node_onehot(g, cfg)
    n = g.n
    parts = [e,
             tape.const(np.broadcast_to(f[:, None, :], (n, n, f.shape[1]))),
             tape.const(np.broadcast_to(f[None, :, :], (n, n, f.shape[1])))]
    if cfg.rrwp_steps:
        parts.append(tape.const(rrwp(g, cfg.rrwp_steps)))
    return _mlp(T.concat(parts), tp, "tok.phi", cfg.activation)


def layer_tape(x: T.Var, cfg: EtConfig, tp: Mapping[str, T.Var], t: int, threads: int | None = None,
               attn_out: list | None = None) -> T.Var:
    p = f"layer{t}"
    h = T.layer_norm_var(x, tp[f"{p}.ln.gamma"], tp[f"{p}.ln.beta"], cfg.ln_eps)
    q = T.matmul(h, tp[f"{p}.wq"])
    k = T.matmul(h, tp[f"{p}.wk"])
    v1 = T.matmul(h, tp[f"{p}.wv1"])
    v2 = T.matmul(h, tp[f"{p}.wv2"])
    dh = cfg.head_dim
    heads = []
    for hd in range(cfg.heads):
        lo, hi = hd * dh, (hd + 1) * dh
        s = T.tri_scores_var(T.take_last(q, lo, hi), T.take_last(k, lo, hi), threads)
        alpha = T.softmax_var(T.scale(s, 1.0 / math.sqrt(dh)), axis=1)
        if attn_out is not None:
            attn_out.append(alpha.data)
        heads.append(T.tri_values_var(alpha, T.take_last(v1, lo, hi), T.take_last(v2, lo, hi), threads))
    o = heads[0] if len(heads) == 1 else T.concat(heads)
    y = T.add(x, T.matmul(o, tp[f"{p}.wo"]))
    out = _mlp(y, tp, f"{p}.ffn", cfg.activation)
    return T.add(y, out) if cfg.ffn_residual else out


def readout_tape(x: T.Var, g: LabeledGraph, cfg: EtConfig, tp: Mapping[str, T.Var], mode: str) -> T.Var:
    if mode == "pair":
        return x
    if mode == "edge":
        idx = _ordered_edges(g)
        flat = T.gather_rows(_flatten_pairs(x), np.asarray([i * g.n + j for i, j in idx], dtype=int))
        return flat
    if mode == "node-diagonal":
        return T.gather_rows(_flatten_pairs(x), np.arange(g.n) * (g.n + 1))
    if mode not in ("node-sum", "graph-sum", "graph-mean"):
        raise ConfigError(f"unknown readout mode {mode!r}")
    r1 = _mlp(x, tp, "readout.rho1", cfg.activation)
    r2 = _mlp(x, tp, "readout.rho2", cfg.activation)
    # node i: sum_j rho1(X_ij) + rho2(X_ji)
    nodes = T.add(T.sum_axis(r1, 1), T.sum_axis(r2, 0))
    if mode == "node-sum":
        return nodes
    return T.sum_axis(nodes, 0) if mode == "graph-sum" else T.mean_axis(nodes, 0)


def _ordered_edges(g: LabeledGraph) -> list[tuple[int, int]]:
    return sorted([(i, j) for i, j in g.edges] + [(j, i) for i, j in g.edges])


def _flatten_pairs(x: T.Var) -> T.Var:
    n, _, d = x.shape
    return x.tape._push(x.data.reshape(n * n, d), (x,), lambda gr: (gr.reshape(n, n, d),))


@dataclass
class ForwardResult:
    states: list[np.ndarray]  # X^(0) .. X^(L)
    readout: np.ndarray
    attention: list[np.ndarray]  # per layer and head, alpha[i, l, j]

    @property
    def pairs(self) -> np.ndarray:
        return self.states[-1]


def record_forward(g: LabeledGraph, params: EtParams, tape: T.Tape, mode: str | None = None,
                   layers: int | None = None, threads: int | None = None, attention: list | None = None):
    """Record the whole forward pass on ``tape``; returns (state vars, readout var)."""
    cfg = params.cfg
    tp = {name: tape.param(name, arr) for name, arr in params.tensors.items()}
    x = tokenize_tape(g, cfg, tp, tape)
    states = [x]
    for t in range(cfg.layers if layers is None else layers):
        x = layer_tape(x, cfg, tp, t, threads, attention)
        states.append(x)
    return states, readout_tape(x, g, cfg, tp, mode or cfg.readout)


def forward(g: LabeledGraph, params: EtParams, mode: str | None = None, threads: int | None = None) -> ForwardResult:
    tape = T.Tape()
    attention: list = []
    states, out = record_forward(g, params, tape, mode, threads=threads, attention=attention)
    return ForwardResult([s.data for s in states], out.data, attention)


def tokenize(g: LabeledGraph, params: EtParams) -> np.ndarray:
    tape = T.Tape()
    tp = {name: tape.param(name, arr) for name, arr in params.tensors.items()}
    return tokenize_tape(g, params.cfg, tp, tape).data


def et_layer(x: np.ndarray, params: EtParams, t: int = 0, threads: int | None = None) -> np.ndarray:
    """Apply layer ``t`` of ``params`` to a pair tensor."""
    if x.ndim != 3 or x.shape[0] != x.shape[1] or x.shape[2] != params.cfg.hidden:
        raise ValueError(f"expected n x n x {params.cfg.hidden} pair tensor, got {x.shape}")
    tape = T.Tape()
    tp = {name: tape.param(name, arr) for name, arr in params.tensors.items()}
    return layer_tape(tape.const(x), params.cfg, tp, t, threads).data
