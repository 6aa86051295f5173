"""Composite objectives and per-epoch weight adaptation strategies.

A training run tracks a small set of aesthetic criteria. Each epoch ends with
one strategy call that turns the observed epoch-mean losses into the weights
used for the next epoch:

- fixed:     alpha = gamma forever;
- adaptive:  alpha_k proportional to gamma_k / L_k, canceling numeric scale;
- softadapt: the adaptive weight additionally boosted by exp(beta * s_k),
  where s is the L1-normalized relative change of exponentially smoothed
  losses, so criteria that descend slowly gain weight.

With beta = 0 the softadapt strategy reproduces the adaptive one bit for bit
(exp(0) is exactly 1), which the tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .losses import CRITERIA, LossEvaluation

_SUM_TOL = 1e-12


def _as_positive_vector(v, what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise errors.LengthMismatch(f"{what} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise errors.NonPositiveLoss(f"{what} must be finite")
    return arr


@dataclass(frozen=True)
class CriterionSpec:
    """Ordered criteria with their importance factors (positive, sum 1)."""

    criteria: tuple[str, ...]
    gamma: tuple[float, ...]

    def __post_init__(self):
        if not self.criteria:
            raise errors.ConfigError("at least one criterion is required")
        unknown = [c for c in self.criteria if c not in CRITERIA]
        if unknown:
            raise errors.ConfigError(f"unknown criteria: {unknown}")
        if len(set(self.criteria)) != len(self.criteria):
            raise errors.ConfigError("criteria must be distinct")
        if len(self.gamma) != len(self.criteria):
            raise errors.LengthMismatch("gamma and criteria lengths differ")
        g = np.asarray(self.gamma, dtype=np.float64)
        if not np.all(g > 0.0):
            raise errors.ConfigError("importance factors must be positive")
        if abs(float(g.sum()) - 1.0) > _SUM_TOL:
            raise errors.ConfigError("importance factors must sum to 1")

    @classmethod
    def normalized(cls, criteria, gamma) -> "CriterionSpec":
        """Build a spec, rescaling positive factors to sum to exactly 1."""
        g = np.asarray(gamma, dtype=np.float64)
        if g.ndim != 1 or not np.all(g > 0.0):
            raise errors.ConfigError("importance factors must be positive")
        g = g / g.sum()
        return cls(criteria=tuple(criteria), gamma=tuple(float(v) for v in g))


@dataclass(frozen=True)
class WeightState:
    """Per-epoch strategy state: current weights plus loss bookkeeping.

    `smoothed` and `prev_loss` are None until the first epoch of losses has
    been observed; `epoch` counts observed epochs.
    """

    alpha: tuple[float, ...]
    smoothed: tuple[float, ...] | None
    prev_loss: tuple[float, ...] | None
    epoch: int

    @classmethod
    def initial(cls, gamma) -> "WeightState":
        """State before any losses are seen: first-epoch weights are gamma."""
        a = _check_weights(np.asarray(gamma, dtype=np.float64))
        return cls(alpha=tuple(float(v) for v in a), smoothed=None, prev_loss=None, epoch=0)


def _check_weights(alpha: np.ndarray) -> np.ndarray:
    if not np.all(alpha > 0.0):
        raise errors.ConfigError("weights must be strictly positive")
    if abs(float(alpha.sum()) - 1.0) > _SUM_TOL:
        raise errors.ConfigError("weights must sum to 1")
    return alpha


def composite_loss(evals: list[LossEvaluation], alpha) -> LossEvaluation:
    """Weighted sum of criterion evaluations (values and gradients alike)."""
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or len(evals) != a.size:
        raise errors.LengthMismatch(f"{len(evals)} evaluations vs {a.size} weights")
    if not evals:
        raise errors.LengthMismatch("at least one evaluation is required")
    value = float(sum(w * e.value for w, e in zip(a, evals)))
    grad = np.zeros_like(evals[0].grad)
    for w, e in zip(a, evals):
        if e.grad.shape != grad.shape:
            raise errors.ShapeMismatch("evaluations disagree on layout shape")
        grad = grad + w * e.grad
    return LossEvaluation(value, grad)


def fixed_weights(gamma) -> np.ndarray:
    """Constant strategy: the importance factors are the weights."""
    g = _as_positive_vector(gamma, "gamma")
    return _check_weights(g.copy())


def adaptive_weights(gamma, prev_loss) -> np.ndarray:
    """Scale-canceling weights: alpha_k proportional to gamma_k / L_k."""
    g = _as_positive_vector(gamma, "gamma")
    loss = _as_positive_vector(prev_loss, "prev_loss")
    if g.size != loss.size:
        raise errors.LengthMismatch("gamma and prev_loss lengths differ")
    if not np.all(loss > 0.0):
        raise errors.NonPositiveLoss("losses must be positive to set adaptive weights")
    raw = g / loss
    return raw / raw.sum()


def softadapt_weights(
    gamma,
    state: WeightState,
    current_loss,
    beta: float = 0.1,
    tau: float = 0.9,
) -> tuple[np.ndarray, WeightState]:
    """Descent-rate-aware weights, called once with each epoch's mean losses.

    Updates the exponentially smoothed losses (first observation is kept
    as-is), computes the L1-normalized relative change s, and returns
    weights proportional to (gamma_k / L_k) * exp(beta * s_k) together with
    the advanced state. All-zero changes leave s = 0.
    """
    g = _as_positive_vector(gamma, "gamma")
    loss = _as_positive_vector(current_loss, "current_loss")
    if g.size != loss.size:
        raise errors.LengthMismatch("gamma and current_loss lengths differ")
    if not np.all(loss > 0.0):
        raise errors.NonPositiveLoss("losses must be positive to set weights")
    if not 0.0 <= tau < 1.0:
        raise errors.ConfigError("tau must lie in [0, 1)")

    if state.smoothed is None:
        smoothed = loss.copy()
        s = np.zeros_like(loss)
    else:
        prev_smoothed = np.asarray(state.smoothed, dtype=np.float64)
        if prev_smoothed.size != loss.size:
            raise errors.LengthMismatch("state does not match the number of criteria")
        smoothed = tau * prev_smoothed + (1.0 - tau) * loss
        rel = (smoothed - prev_smoothed) / prev_smoothed
        denom = float(np.abs(rel).sum())
        s = rel / denom if denom > 0.0 else np.zeros_like(rel)

    raw = (g / loss) * np.exp(beta * s)
    alpha = raw / raw.sum()
    new_state = WeightState(
        alpha=tuple(float(v) for v in alpha),
        smoothed=tuple(float(v) for v in smoothed),
        prev_loss=tuple(float(v) for v in loss),
        epoch=state.epoch + 1,
    )
    return alpha, new_state
