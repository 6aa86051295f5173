"""Neural-network building blocks on top of the autodiff tape.

Dense layers (row-vector convention: y = x W + b), the three activations the
layout model uses, batch normalization over the pooled node dimension, the
AdamW parameter update with decoupled weight decay, and the exponential
learning-rate schedule.

AdamW and the schedule are pure ndarray functions; the tape is only involved
in the forward ops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors
from .autodiff import Tensor, _node, add_rowvec, matmul

ACTIVATIONS = ("relu", "leaky_relu", "tanh")
LEAKY_SLOPE = 0.01


@dataclass
class DenseParams:
    """Learnable affine map: in_dim x out_dim weights plus out_dim bias."""

    w: Tensor
    b: Tensor

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: np.random.Generator, scale: float | None = None) -> "DenseParams":
        """Gaussian init with 1/sqrt(in_dim) scale unless overridden."""
        s = scale if scale is not None else 1.0 / np.sqrt(max(in_dim, 1))
        w = Tensor(s * rng.standard_normal((in_dim, out_dim)), requires_grad=True)
        b = Tensor(np.zeros(out_dim), requires_grad=True)
        return cls(w=w, b=b)

    def tensors(self) -> list[Tensor]:
        return [self.w, self.b]


def dense_forward(x: Tensor, p: DenseParams) -> Tensor:
    """Affine map x W + b, recorded on the tape."""
    return add_rowvec(matmul(x, p.w), p.b)


def activation(x: Tensor, kind: str) -> Tensor:
    """Elementwise relu / leaky_relu (slope 0.01) / tanh."""
    if kind == "relu":
        mask = x.data > 0.0
        out = np.where(mask, x.data, 0.0)

        def bw(g):
            if x.requires_grad:
                x._accumulate(np.where(mask, g, 0.0))

    elif kind == "leaky_relu":
        mask = x.data > 0.0
        out = np.where(mask, x.data, LEAKY_SLOPE * x.data)

        def bw(g):
            if x.requires_grad:
                x._accumulate(np.where(mask, g, LEAKY_SLOPE * g))

    elif kind == "tanh":
        out = np.tanh(x.data)

        def bw(g):
            if x.requires_grad:
                x._accumulate(g * (1.0 - out**2))

    else:
        raise errors.ConfigError(f"unknown activation {kind!r}")
    return _node(out, (x,), bw)


@dataclass
class BatchNormState:
    """Per-feature affine learnables plus running statistics.

    Training mode normalizes each feature over all rows (every node of every
    graph in the batch pooled together) and advances the running stats with
    the given momentum; inference mode normalizes with the running stats, so
    single-row inputs stay well-defined.
    """

    scale: Tensor
    shift: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def create(cls, dim: int, momentum: float = 0.1, eps: float = 1e-5) -> "BatchNormState":
        return cls(
            scale=Tensor(np.ones(dim), requires_grad=True),
            shift=Tensor(np.zeros(dim), requires_grad=True),
            running_mean=np.zeros(dim),
            running_var=np.ones(dim),
            momentum=momentum,
            eps=eps,
        )

    def tensors(self) -> list[Tensor]:
        return [self.scale, self.shift]


def batch_norm(x: Tensor, s: BatchNormState, training: bool) -> Tensor:
    """Normalize features over the row dimension (training) or running stats."""
    if x.data.ndim != 2 or x.data.shape[0] < 1:
        raise errors.ShapeMismatch("batch_norm expects a non-empty 2-d input")
    if x.data.shape[1] != s.scale.data.shape[0]:
        raise errors.ShapeMismatch(f"batch_norm: {x.shape} vs {s.scale.data.shape[0]} features")
    if training:
        n = x.data.shape[0]
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)  # biased, as used for normalization
        inv = 1.0 / np.sqrt(var + s.eps)
        xhat = (x.data - mu) * inv
        s.running_mean = (1.0 - s.momentum) * s.running_mean + s.momentum * mu
        s.running_var = (1.0 - s.momentum) * s.running_var + s.momentum * var
        out = xhat * s.scale.data + s.shift.data

        def bw(g):
            dxhat = g * s.scale.data
            if x.requires_grad:
                # standard batch-norm backward, var and mean terms folded in
                gsum = dxhat.sum(axis=0)
                gdot = (dxhat * xhat).sum(axis=0)
                x._accumulate(inv / n * (n * dxhat - gsum - xhat * gdot))
            if s.scale.requires_grad:
                s.scale._accumulate((g * xhat).sum(axis=0))
            if s.shift.requires_grad:
                s.shift._accumulate(g.sum(axis=0))

    else:
        inv = 1.0 / np.sqrt(s.running_var + s.eps)
        xhat = (x.data - s.running_mean) * inv
        out = xhat * s.scale.data + s.shift.data

        def bw(g):
            if x.requires_grad:
                x._accumulate(g * s.scale.data * inv)
            if s.scale.requires_grad:
                s.scale._accumulate((g * xhat).sum(axis=0))
            if s.shift.requires_grad:
                s.shift._accumulate(g.sum(axis=0))

    return _node(out, (x, s.scale, s.shift), bw)


@dataclass
class AdamWState:
    """Moment accumulators and step counter for one parameter list."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def create(cls, params: list[np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamWState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            step=0,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adamw_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamWState,
    lr: float,
    weight_decay: float,
) -> list[np.ndarray]:
    """One AdamW update; returns new parameter arrays, advances state in place.

    Weight decay is decoupled (p -= lr * wd * p), applied alongside the
    bias-corrected Adam step. lr = 0 leaves parameters untouched.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise errors.ShapeMismatch("params/grads/state length mismatch")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise errors.ShapeMismatch(f"param {i}: {p.shape} vs grad {g.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g**2
        mhat = state.m[i] / c1
        vhat = state.v[i] / c2
        out.append(p - lr * weight_decay * p - lr * mhat / (np.sqrt(vhat) + state.eps))
    return out


def lr_schedule(lr0: float, rate: float, epoch: int) -> float:
    """Exponentially decayed learning rate lr0 * rate**epoch."""
    if not 0.0 < rate <= 1.0:
        raise errors.ConfigError("decay rate must lie in (0, 1]")
    if epoch < 0:
        raise errors.ConfigError("epoch must be non-negative")
    return float(lr0) * float(rate) ** int(epoch)
