"""Dense float64 kernels and a small tape-based reverse-mode differentiator.

Arrays are plain ``numpy.ndarray`` values; every op here is written out by hand,
including its backward rule.  The two triangular contractions accumulate in a
fixed order (over ``d`` for scores, over ``l`` for values) so they agree bit for
bit with a naive loop, and the threaded variants split only the ``i`` axis, which
leaves that order untouched.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

GELU_C = math.sqrt(2.0 / math.pi)
GELU_A = 0.044715

DEBUG = os.environ.get("ETWL_DEBUG", "") not in ("", "0")


def default_threads() -> int:
    return max(1, int(os.environ.get("ETWL_THREADS", "1")))


def _check(x: np.ndarray, what: str) -> np.ndarray:
    if DEBUG and not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values produced by {what}")
    return x


def _row_chunks(n: int, threads: int) -> list[slice]:
    size = max(1, -(-n // threads))
    return [slice(s, min(n, s + size)) for s in range(0, n, size)]


def _map_rows(fn: Callable[[slice], None], n: int, threads: int) -> None:
    if threads <= 1 or n <= 1:
        fn(slice(0, n))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, _row_chunks(n, threads)))


# --- primal kernels -------------------------------------------------------

def tri_contract_scores(q: np.ndarray, k: np.ndarray, threads: int | None = None) -> np.ndarray:
    """out[i, l, j] = sum_d q[i, l, d] * k[l, j, d]."""
    if q.ndim != 3 or q.shape != k.shape or q.shape[0] != q.shape[1]:
        raise ValueError(f"expected matching n x n x d inputs, got {q.shape} and {k.shape}")
    n, _, d = q.shape
    out = np.zeros((n, n, n))
    threads = default_threads() if threads is None else threads

    def work(rows: slice) -> None:
        acc = out[rows]
        for c in range(d):
            acc += q[rows, :, c, None] * k[None, :, :, c]

    _map_rows(work, n, threads)
    return _check(out, "tri_contract_scores")


def tri_contract_values(a: np.ndarray, v: np.ndarray, threads: int | None = None) -> np.ndarray:
    """out[i, j, d] = sum_l a[i, l, j] * v[i, l, j, d] for an explicit n x n x n x d value tensor."""
    if a.ndim != 3 or v.ndim != 4 or v.shape[:3] != a.shape or len(set(a.shape)) != 1:
        raise ValueError(f"expected n x n x n and n x n x n x d inputs, got {a.shape} and {v.shape}")
    n, d = a.shape[0], v.shape[3]
    out = np.zeros((n, n, d))
    threads = default_threads() if threads is None else threads

    def work(rows: slice) -> None:
        acc = out[rows]
        for l in range(n):
            acc += a[rows, l, :, None] * v[rows, l, :, :]

    _map_rows(work, n, threads)
    return _check(out, "tri_contract_values")


def fused_tri_values(a: np.ndarray, v1: np.ndarray, v2: np.ndarray, threads: int | None = None) -> np.ndarray:
    """out[i, j, d] = sum_l a[i, l, j] * (v1[i, l, d] * v2[l, j, d]) without building the n^3 d tensor."""
    if a.ndim != 3 or v1.shape != v2.shape or v1.shape[:2] != a.shape[:2] or len(set(a.shape)) != 1:
        raise ValueError(f"shape mismatch: {a.shape}, {v1.shape}, {v2.shape}")
    n, d = a.shape[0], v1.shape[2]
    out = np.zeros((n, n, d))
    threads = default_threads() if threads is None else threads

    def work(rows: slice) -> None:
        acc = out[rows]
        for l in range(n):
            acc += a[rows, l, :, None] * (v1[rows, l, None, :] * v2[None, l, :, :])

    _map_rows(work, n, threads)
    return _check(out, "fused_tri_values")


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_lastdim(x: np.ndarray) -> np.ndarray:
    if x.shape[-1] < 1:
        raise ValueError("softmax over an empty axis")
    return softmax(x, -1)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gamma + beta


def gelu(x: np.ndarray) -> np.ndarray:
    """tanh approximation, 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))."""
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + GELU_A * x ** 3)))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


# --- tape -----------------------------------------------------------------

class Var:
    """A value recorded on a :class:`Tape`."""

    __slots__ = ("data", "tape", "index", "name")

    def __init__(self, data: np.ndarray, tape: "Tape", index: int, name: str | None = None):
        self.data = data
        self.tape = tape
        self.index = index
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Linear record of primal ops; ``backward`` replays it in reverse."""

    def __init__(self):
        self.values: list[Var] = []
        # Per entry: (parent indices, vector-Jacobian product) or None for leaves.
        self.rules: list[tuple[tuple[int, ...], Callable] | None] = []
        self.params: dict[str, Var] = {}

    def __len__(self) -> int:
        return len(self.values)

    def _push(self, data: np.ndarray, parents: Sequence[Var] = (), vjp: Callable | None = None,
              name: str | None = None) -> Var:
        v = Var(np.asarray(data, dtype=np.float64), self, len(self.values), name)
        self.values.append(v)
        self.rules.append((tuple(p.index for p in parents), vjp) if vjp is not None else None)
        return v

    def param(self, name: str, data: np.ndarray) -> Var:
        if name in self.params:
            raise ValueError(f"parameter {name!r} recorded twice")
        v = self._push(np.array(data, dtype=np.float64), name=name)
        self.params[name] = v
        return v

    def const(self, data) -> Var:
        return self._push(np.array(data, dtype=np.float64))


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _tape_of(*xs: Var) -> Tape:
    tape = xs[0].tape
    for x in xs[1:]:
        if x.tape is not tape:
            raise ValueError("operands recorded on different tapes")
    return tape


def add(a: Var, b: Var) -> Var:
    t = _tape_of(a, b)
    sa, sb = a.shape, b.shape
    return t._push(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def mul(a: Var, b: Var) -> Var:
    t = _tape_of(a, b)
    ad, bd = a.data, b.data
    return t._push(ad * bd, (a, b), lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def scale(a: Var, c: float) -> Var:
    return a.tape._push(a.data * c, (a,), lambda g: (g * c,))


def matmul(x: Var, w: Var) -> Var:
    """Right-multiply the last axis of ``x`` by a 2-D matrix ``w``."""
    t = _tape_of(x, w)
    xd, wd = x.data, w.data
    if wd.ndim != 2 or xd.shape[-1] != wd.shape[0]:
        raise ValueError(f"matmul shape mismatch {xd.shape} @ {wd.shape}")

    def vjp(g):
        gx = g @ wd.T
        gw = xd.reshape(-1, xd.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return gx, gw

    return t._push(_check(xd @ wd, "matmul"), (x, w), vjp)


def total(x: Var) -> Var:
    shape = x.shape
    return x.tape._push(np.array(x.data.sum()), (x,), lambda g: (np.full(shape, float(g)),))


def vdot(x: Var, weights: np.ndarray) -> Var:
    """Scalar sum(x * weights) for a constant weight array."""
    w = np.asarray(weights, dtype=np.float64)
    return x.tape._push(np.array(np.sum(x.data * w)), (x,), lambda g: (float(g) * w,))


def concat(xs: Sequence[Var], axis: int = -1) -> Var:
    t = _tape_of(*xs)
    sizes = [x.shape[axis] for x in xs]
    splits = np.cumsum(sizes)[:-1]
    return t._push(np.concatenate([x.data for x in xs], axis=axis), xs,
                   lambda g: tuple(np.split(g, splits, axis=axis)))


def take_last(x: Var, start: int, stop: int) -> Var:
    shape = x.shape

    def vjp(g):
        out = np.zeros(shape)
        out[..., start:stop] = g
        return (out,)

    return x.tape._push(x.data[..., start:stop], (x,), vjp)


def gather_rows(x: Var, index: np.ndarray) -> Var:
    """out[...] = x[index[...]] along axis 0, with scatter-add backward."""
    shape = x.shape
    idx = np.asarray(index)

    def vjp(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return x.tape._push(x.data[idx], (x,), vjp)


def transpose01(x: Var) -> Var:
    return x.tape._push(np.swapaxes(x.data, 0, 1), (x,), lambda g: (np.swapaxes(g, 0, 1),))


def sum_axis(x: Var, axis: int) -> Var:
    shape = x.shape
    return x.tape._push(x.data.sum(axis=axis), (x,), lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),))


def mean_axis(x: Var, axis: int) -> Var:
    shape = x.shape
    n = shape[axis]
    return x.tape._push(x.data.mean(axis=axis), (x,),
                        lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape) / n,))


def softmax_var(x: Var, axis: int = -1) -> Var:
    y = softmax(x.data, axis)
    return x.tape._push(_check(y, "softmax"), (x,), lambda g: (y * (g - np.sum(g * y, axis=axis, keepdims=True)),))


def layer_norm_var(x: Var, gamma: Var, beta: Var, eps: float = 1e-5) -> Var:
    t = _tape_of(x, gamma, beta)
    xd, gd = x.data, gamma.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    inv = 1.0 / np.sqrt((xc ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    d = xd.shape[-1]

    def vjp(g):
        gh = g * gd
        gx = inv * (gh - gh.mean(axis=-1, keepdims=True) - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        red = tuple(range(g.ndim - 1))
        return gx, np.sum(g * xhat, axis=red), np.sum(g, axis=red)

    assert gd.shape == (d,) and beta.data.shape == (d,)
    return t._push(_check(xhat * gd + beta.data, "layer_norm"), (x, gamma, beta), vjp)


def gelu_var(x: Var) -> Var:
    xd = x.data
    u = GELU_C * (xd + GELU_A * xd ** 3)
    th = np.tanh(u)

    def vjp(g):
        du = GELU_C * (1.0 + 3.0 * GELU_A * xd ** 2)
        return (g * (0.5 * (1.0 + th) + 0.5 * xd * (1.0 - th ** 2) * du),)

    return x.tape._push(0.5 * xd * (1.0 + th), (x,), vjp)


def relu_var(x: Var) -> Var:
    mask = (x.data > 0).astype(np.float64)
    return x.tape._push(x.data * mask, (x,), lambda g: (g * mask,))


def tri_scores_var(q: Var, k: Var, threads: int | None = None) -> Var:
    t = _tape_of(q, k)
    qd, kd = q.data, k.data

    def vjp(g):
        # g[i, l, j]
        return np.einsum("ilj,ljd->ild", g, kd), np.einsum("ilj,ild->ljd", g, qd)

    return t._push(tri_contract_scores(qd, kd, threads), (q, k), vjp)


def tri_values_var(a: Var, v1: Var, v2: Var, threads: int | None = None) -> Var:
    t = _tape_of(a, v1, v2)
    ad, d1, d2 = a.data, v1.data, v2.data
    n = ad.shape[0]

    def vjp(g):
        ga = np.empty_like(ad)
        g1 = np.empty_like(d1)
        g2 = np.empty_like(d2)
        for l in range(n):
            ga[:, l, :] = np.einsum("ijd,id,jd->ij", g, d1[:, l, :], d2[l])
            g1[:, l, :] = np.einsum("ijd,ij,jd->id", g, ad[:, l, :], d2[l])
            g2[l] = np.einsum("ijd,ij,id->jd", g, ad[:, l, :], d1[:, l, :])
        return ga, g1, g2

    return t._push(fused_tri_values(ad, d1, d2, threads), (a, v1, v2), vjp)


def backward(tape: Tape, loss_grad: np.ndarray | float | None = None, output: Var | None = None) -> dict[str, np.ndarray]:
    """Reverse sweep from ``output`` (default: last recorded value); returns grads for every param."""
    if not tape.values:
        raise ValueError("tape is empty")
    out = output if output is not None else tape.values[-1]
    if loss_grad is None:
        if out.data.size != 1:
            raise ValueError("loss_grad is required for a non-scalar output")
        loss_grad = np.ones_like(out.data)
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != out.data.shape:
        raise ValueError(f"loss_grad shape {loss_grad.shape} does not match output {out.data.shape}")
    grads: list[np.ndarray | None] = [None] * len(tape.values)
    grads[out.index] = loss_grad
    for idx in range(out.index, -1, -1):
        g = grads[idx]
        rule = tape.rules[idx]
        if g is None or rule is None:
            continue
        parents, vjp = rule
        for p, gp in zip(parents, vjp(g)):
            grads[p] = gp if grads[p] is None else grads[p] + gp
    return {name: (grads[v.index] if grads[v.index] is not None else np.zeros_like(v.data))
            for name, v in tape.params.items()}
