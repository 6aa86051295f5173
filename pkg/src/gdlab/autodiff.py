"""Minimal reverse-mode automatic differentiation on dense float64 arrays.

A Tensor wraps an ndarray plus an additive gradient slot. Ops build a tape
implicitly through parent links and per-node backward closures; `backward`
runs the closures exactly once each, in reverse topological order, from a
scalar root. Only the ops the layout model needs are provided; everything is
CPU numpy, nothing is fused.

Gradient conventions at non-differentiable points follow the loss module:
row norms and row directions use subgradient 0 for zero-length rows.
"""

from __future__ import annotations

import numpy as np

from . import errors


class Tensor:
    """Tape node: value, gradient accumulator, and the rule to push grads."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None


def leaf(data, requires_grad: bool = True) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _node(data, parents, backward) -> Tensor:
    t = Tensor(data, parents=parents, backward=backward)
    if not t.requires_grad:
        t._backward = None
    return t


def backward(root: Tensor) -> None:
    """Push d(root)/d(node) into every reachable tensor's grad slot."""
    if root.data.size != 1:
        raise errors.NonScalarRoot(f"backward root must be scalar, got shape {root.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    root._accumulate(np.ones_like(root.data))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise errors.ShapeMismatch(f"add: {a.shape} vs {b.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return _node(a.data + b.data, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bw(g):
        if a.requires_grad:
            a._accumulate(c * g)

    return _node(c * a.data, (a,), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise errors.ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _node(a.data @ b.data, (a, b), bw)


def add_rowvec(a: Tensor, v: Tensor) -> Tensor:
    """Broadcast a length-k row vector across every row of an m×k matrix."""
    if a.data.ndim != 2 or v.data.ndim != 1 or a.data.shape[1] != v.data.shape[0]:
        raise errors.ShapeMismatch(f"add_rowvec: {a.shape} + {v.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g)
        if v.requires_grad:
            v._accumulate(g.sum(axis=0))

    return _node(a.data + v.data[None, :], (a, v), bw)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows (with repetition); backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.int64)

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.add.at(acc, idx, g)
            a._accumulate(acc)

    return _node(a.data[idx], (a,), bw)


def segment_mean(a: Tensor, offsets: np.ndarray, counts: np.ndarray) -> Tensor:
    """Mean over contiguous row segments; empty segments yield zero rows.

    `offsets[i]` is the first row of segment i and `counts[i]` its length;
    segments tile the rows of `a` in order.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    rows = a.data.shape[0]
    if counts.sum() != rows:
        raise errors.ShapeMismatch("segments must tile all rows")
    if rows:
        # clamp keeps empty trailing segments in range; the mask zeroes them
        sums = np.add.reduceat(a.data, np.minimum(offsets, rows - 1), axis=0)
    else:
        sums = np.zeros((counts.size, a.data.shape[1]))
    # reduceat repeats the previous sum for empty segments; force those to 0
    sums = np.where(counts[:, None] > 0, sums, 0.0)
    denom = np.maximum(counts, 1).astype(np.float64)
    out = sums / denom[:, None]

    def bw(g):
        if a.requires_grad:
            a._accumulate(np.repeat(g / denom[:, None], counts, axis=0))

    return _node(out, (a,), bw)


def edge_matvec(h: Tensor, t: Tensor, f_out: int) -> Tensor:
    """Per-row linear map: out[e] = h[e] @ T_e with T_e = t[e] as f_in×f_out."""
    e, f_in = h.data.shape
    if t.data.shape != (e, f_in * f_out):
        raise errors.ShapeMismatch(f"edge_matvec: {h.shape} with maps {t.shape}")
    tm = t.data.reshape(e, f_in, f_out)
    out = np.einsum("ef,efo->eo", h.data, tm)

    def bw(g):
        if h.requires_grad:
            h._accumulate(np.einsum("eo,efo->ef", g, tm))
        if t.requires_grad:
            t._accumulate(np.einsum("ef,eo->efo", h.data, g).reshape(e, f_in * f_out))

    return _node(out, (h, t), bw)


def concat_cols(parts: list[Tensor]) -> Tensor:
    rows = {p.data.shape[0] for p in parts}
    if len(rows) != 1:
        raise errors.ShapeMismatch("concat_cols: row counts differ")
    widths = [p.data.shape[1] for p in parts]
    out = np.concatenate([p.data for p in parts], axis=1)

    def bw(g):
        col = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                p._accumulate(g[:, col : col + w])
            col += w

    return _node(out, tuple(parts), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise errors.ShapeMismatch(f"sub: {a.shape} vs {b.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(-g)

    return _node(a.data - b.data, (a, b), bw)


def row_norms(a: Tensor) -> Tensor:
    """Euclidean norm of each row as an m×1 column; subgradient 0 at 0."""
    r = np.sqrt((a.data**2).sum(axis=1, keepdims=True))
    safe = np.where(r > 0.0, r, 1.0)
    u = np.where(r > 0.0, a.data / safe, 0.0)

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * u)

    return _node(r, (a,), bw)


def unit_rows(a: Tensor) -> Tensor:
    """Each row divided by its norm; zero rows map to zero with zero grad."""
    r = np.sqrt((a.data**2).sum(axis=1, keepdims=True))
    safe = np.where(r > 0.0, r, 1.0)
    u = np.where(r > 0.0, a.data / safe, 0.0)
    nonzero = r > 0.0

    def bw(g):
        if a.requires_grad:
            inner = (g * u).sum(axis=1, keepdims=True)
            a._accumulate(np.where(nonzero, (g - u * inner) / safe, 0.0))

    return _node(u, (a,), bw)


def inject_scalar(value: float, x: Tensor, grad_x: np.ndarray) -> Tensor:
    """Scalar node with an externally supplied exact gradient wrt `x`.

    Lets analytically differentiated functions of x participate in the tape:
    the forward value is taken as given and backward adds grad_x (times the
    upstream scalar) into x.
    """
    grad_x = np.asarray(grad_x, dtype=np.float64)
    if grad_x.shape != x.data.shape:
        raise errors.ShapeMismatch(f"inject_scalar: grad {grad_x.shape} vs x {x.shape}")

    def bw(g):
        if x.requires_grad:
            x._accumulate(float(g) * grad_x)

    return _node(np.float64(value), (x,), bw)
