"""Gradient descent directly over node coordinates.

The model-free path through the framework: the same aesthetic criteria,
composite objective, and per-epoch weighting strategies, applied to the
positions themselves instead of network parameters. Used for Pareto sweeps
and as an optimization cross-check against stress majorization.

An "epoch" here is a fixed window of descent steps; the weighting strategy
advances once per window from the window's mean criterion losses. The best
composite iterate ever visited (the initial layout included) is returned,
so the result never regresses below the starting point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import errors
from .baselines import random_init
from .graphs import Graph, shortest_paths
from .losses import LossEvaluation, angle_loss, edge_var_loss, occlusion_loss, stress_loss, tsne_affinities, tsne_loss
from .validation import check_layout
from .weighting import CriterionSpec, WeightState, adaptive_weights, composite_loss, fixed_weights, softadapt_weights

OPTIMIZERS = ("plain", "adam")


@dataclass(frozen=True)
class DescentConfig:
    """Settings for direct position optimization."""

    spec: CriterionSpec = field(default_factory=lambda: CriterionSpec(("stress",), (1.0,)))
    strategy: str = "adaptive"
    beta: float = 0.1
    tau: float = 0.9
    steps: int = 500
    step_size: float = 0.05
    optimizer: str = "adam"
    steps_per_epoch: int = 50
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise errors.ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.strategy not in ("fixed", "adaptive", "softadapt"):
            raise errors.ConfigError(f"unknown strategy {self.strategy!r}")
        if self.steps < 1 or self.steps_per_epoch < 1 or self.restarts < 1:
            raise errors.ConfigError("counts must be positive")
        if self.step_size < 0:
            raise errors.ConfigError("step size must be non-negative")


@dataclass(frozen=True)
class TrajectoryRow:
    step: int
    values: tuple[float, ...]
    composite: float
    alpha: tuple[float, ...]


@dataclass(frozen=True)
class Trajectory:
    criteria: tuple[str, ...]
    rows: tuple[TrajectoryRow, ...]


def _evaluators(g: Graph, criteria: tuple[str, ...]):
    d = shortest_paths(g).astype(np.float64)
    aff = tsne_affinities(d) if "tsne" in criteria and g.n >= 2 else None
    fns = {}
    for name in criteria:
        if name == "stress":
            fns[name] = lambda x: stress_loss(x, d)
        elif name == "tsne":
            fns[name] = (lambda x: tsne_loss(x, aff)) if aff is not None else (lambda x: LossEvaluation(0.0, np.zeros_like(x)))
        elif name == "angle":
            fns[name] = lambda x: angle_loss(x, g)
        elif name == "edge_var":
            fns[name] = lambda x: edge_var_loss(x, g)
        elif name == "occlusion":
            fns[name] = occlusion_loss
        else:
            raise errors.ConfigError(f"unknown criterion {name!r}")
    return fns


def _run_descent(x0: np.ndarray, fns, cfg: DescentConfig):
    criteria = cfg.spec.criteria
    gamma = np.asarray(cfg.spec.gamma)
    alpha = gamma.copy()
    wstate = WeightState.initial(cfg.spec.gamma)
    x = x0.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    best_x = x.copy()
    best_comp = np.inf
    rows: list[TrajectoryRow] = []
    window = np.zeros(len(criteria))
    in_window = 0

    for step in range(cfg.steps + 1):
        evals = [fns[name](x) for name in criteria]
        for name, ev in zip(criteria, evals):
            if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.grad)):
                raise errors.NonFiniteLoss(f"criterion {name!r} non-finite at step {step}")
        comp = composite_loss(evals, alpha)
        rows.append(
            TrajectoryRow(
                step=step,
                values=tuple(float(e.value) for e in evals),
                composite=float(comp.value),
                alpha=tuple(float(a) for a in alpha),
            )
        )
        if comp.value < best_comp:
            best_comp = float(comp.value)
            best_x = x.copy()
        if step == cfg.steps:
            break

        if cfg.optimizer == "plain":
            x = x - cfg.step_size * comp.grad
        else:
            m = beta1 * m + (1.0 - beta1) * comp.grad
            v = beta2 * v + (1.0 - beta2) * comp.grad**2
            t = step + 1
            mhat = m / (1.0 - beta1**t)
            vhat = v / (1.0 - beta2**t)
            x = x - cfg.step_size * mhat / (np.sqrt(vhat) + eps)

        window += [e.value for e in evals]
        in_window += 1
        if in_window == cfg.steps_per_epoch:
            means = window / in_window
            alpha, wstate = _advance_alpha(cfg, means, alpha, wstate)
            window[:] = 0.0
            in_window = 0

    return best_x, best_comp, Trajectory(criteria=criteria, rows=tuple(rows))


def _advance_alpha(cfg: DescentConfig, means: np.ndarray, alpha: np.ndarray, wstate: WeightState):
    """Strategy update; a criterion at exactly 0 keeps the previous weights
    (a perfectly satisfied criterion would otherwise demand infinite weight)."""
    gamma = np.asarray(cfg.spec.gamma)
    if cfg.strategy == "fixed":
        return fixed_weights(gamma), wstate
    if not np.all(means > 0.0):
        return alpha, wstate
    if cfg.strategy == "adaptive":
        return adaptive_weights(gamma, means), wstate
    return softadapt_weights(gamma, wstate, means, beta=cfg.beta, tau=cfg.tau)


def optimize_layout(g: Graph, init, cfg: DescentConfig) -> tuple[np.ndarray, Trajectory]:
    """Descend the weighted composite from `init`; extra restarts descend
    from fresh random layouts. Returns the best iterate seen anywhere and
    the trajectory of the restart that produced it."""
    x0 = check_layout(init, g.n)
    fns = _evaluators(g, cfg.spec.criteria)
    best = None
    for r in range(cfg.restarts):
        start = x0 if r == 0 else random_init(g.n, cfg.seed + r)
        x, comp, traj = _run_descent(start, fns, cfg)
        if best is None or comp < best[1]:
            best = (x, comp, traj)
    return best[0], best[2]


class DirectLayoutOptimizer(BaseEstimator):
    """Estimator facade over optimize_layout for one graph at a time."""

    def __init__(
        self,
        criteria=("stress",),
        gamma=(1.0,),
        strategy: str = "adaptive",
        beta: float = 0.1,
        tau: float = 0.9,
        steps: int = 500,
        step_size: float = 0.05,
        optimizer: str = "adam",
        steps_per_epoch: int = 50,
        restarts: int = 1,
        seed: int = 0,
    ):
        self.criteria = criteria
        self.gamma = gamma
        self.strategy = strategy
        self.beta = beta
        self.tau = tau
        self.steps = steps
        self.step_size = step_size
        self.optimizer = optimizer
        self.steps_per_epoch = steps_per_epoch
        self.restarts = restarts
        self.seed = seed

    def _config(self) -> DescentConfig:
        return DescentConfig(
            spec=CriterionSpec(tuple(self.criteria), tuple(float(v) for v in self.gamma)),
            strategy=self.strategy,
            beta=self.beta,
            tau=self.tau,
            steps=self.steps,
            step_size=self.step_size,
            optimizer=self.optimizer,
            steps_per_epoch=self.steps_per_epoch,
            restarts=self.restarts,
            seed=self.seed,
        )

    def fit(self, g: Graph, y=None, init=None) -> "DirectLayoutOptimizer":
        if init is None:
            init = random_init(g.n, self.seed)
        self.embedding_, self.trajectory_ = optimize_layout(g, init, self._config())
        self.loss_ = min(row.composite for row in self.trajectory_.rows)
        return self

    def fit_transform(self, g: Graph, y=None, init=None) -> np.ndarray:
        return self.fit(g, y, init=init).embedding_
