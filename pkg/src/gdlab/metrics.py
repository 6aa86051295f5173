"""Layout metrics, the symmetric percent change statistic, and Pareto sweeps.

evaluate_layout reports all five criterion values for one graph/layout pair
(delegating to the loss functions, values only). spc compares two methods'
per-graph values with a bounded antisymmetric statistic. pareto_sweep runs a
grid of (strategy, importance split) cells over a dataset with either the
direct position optimizer or a freshly trained model per cell and reports
the two mean criterion losses per cell.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import errors
from .baselines import PivotMDS
from .descent import DescentConfig, optimize_layout
from .graphs import Graph, shortest_paths
from .losses import CRITERIA, angle_loss, default_perplexity, edge_var_loss, occlusion_loss, stress_loss, tsne_affinities, tsne_loss
from .validation import check_layout
from .weighting import CriterionSpec

ENGINES = ("direct", "model")


@dataclass(frozen=True)
class MetricsReport:
    """Per-graph values of the five criteria plus layout wall-clock time."""

    stress: float
    tsne: float
    angle: float
    edge_var: float
    occlusion: float
    layout_seconds: float = 0.0

    def value(self, criterion: str) -> float:
        if criterion not in CRITERIA:
            raise errors.ConfigError(f"unknown criterion {criterion!r}")
        return float(getattr(self, criterion))

    def as_dict(self) -> dict:
        return {
            "stress": self.stress,
            "tsne": self.tsne,
            "angle": self.angle,
            "edge_var": self.edge_var,
            "occlusion": self.occlusion,
            "layout_seconds": self.layout_seconds,
        }


@dataclass(frozen=True)
class ParetoPoint:
    strategy: str
    gamma_a: float
    gamma_b: float
    mean_loss_a: float
    mean_loss_b: float


def evaluate_layout(g: Graph, x, layout_seconds: float = 0.0) -> MetricsReport:
    """All five criterion values for the given layout of g."""
    x = check_layout(x, g.n)
    if g.n < 2:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0.0, layout_seconds)
    d = shortest_paths(g).astype(np.float64)
    aff = tsne_affinities(d, default_perplexity(g.n))
    return MetricsReport(
        stress=stress_loss(x, d).value,
        tsne=tsne_loss(x, aff).value,
        angle=angle_loss(x, g).value,
        edge_var=edge_var_loss(x, g).value,
        occlusion=occlusion_loss(x).value,
        layout_seconds=float(layout_seconds),
    )


def spc(d_values, g_values) -> float:
    """Symmetric percent change: 100/N * sum (D_i - G_i)/max(D_i, G_i).

    Positive means the second sequence is smaller (better, for losses) on
    average; swapping the arguments negates the result.
    """
    d = np.asarray(d_values, dtype=np.float64)
    g = np.asarray(g_values, dtype=np.float64)
    if d.ndim != 1 or g.ndim != 1 or d.size != g.size or d.size == 0:
        raise errors.LengthMismatch(f"need equal-length non-empty sequences, got {d.size} vs {g.size}")
    if not (np.all(d > 0.0) and np.all(g > 0.0)):
        raise errors.NonPositiveValue("spc requires strictly positive values")
    return float(100.0 * np.mean((d - g) / np.maximum(d, g)))


def _criterion_value(name: str, g: Graph, x: np.ndarray, cache: dict) -> float:
    if name == "stress":
        return stress_loss(x, cache["d"]).value
    if name == "tsne":
        return tsne_loss(x, cache["aff"]).value
    if name == "angle":
        return angle_loss(x, g).value
    if name == "edge_var":
        return edge_var_loss(x, g).value
    if name == "occlusion":
        return occlusion_loss(x).value
    raise errors.ConfigError(f"unknown criterion {name!r}")


def pareto_sweep(
    dataset: list[Graph],
    pair: tuple[str, str],
    strategies: list[str],
    gamma_grid: list[tuple[float, float]],
    engine: str = "direct",
    engine_config=None,
    seed: int = 0,
) -> list[ParetoPoint]:
    """Mean criterion-A/B losses for every (strategy, gamma split) cell.

    engine "direct" descends each graph's positions from its low-stress
    spectral initialization; engine "model" trains one network per cell on
    the dataset and evaluates its inferred layouts. `engine_config` is the
    corresponding config template (DescentConfig or TrainConfig); its
    criteria/strategy fields are overridden per cell. Points come back
    sorted by (strategy, gamma_a).
    """
    name_a, name_b = pair
    for name in (name_a, name_b):
        if name not in CRITERIA:
            raise errors.ConfigError(f"unknown criterion {name!r}")
    if engine not in ENGINES:
        raise errors.ConfigError(f"unknown engine {engine!r}")
    if not dataset:
        raise errors.EmptyInput("pareto sweep needs at least one graph")
    if not gamma_grid or not strategies:
        raise errors.ConfigError("need at least one strategy and one grid point")

    caches = []
    inits = []
    for g in dataset:
        d = shortest_paths(g).astype(np.float64)
        cache = {"d": d}
        if "tsne" in pair and g.n >= 2:
            cache["aff"] = tsne_affinities(d, default_perplexity(g.n))
        caches.append(cache)
        inits.append(PivotMDS(random_state=seed).fit(d).embedding_)

    points = []
    for strategy in strategies:
        for ga, gb in gamma_grid:
            # zero-importance criteria drop out of the cell's objective
            # (grid endpoints optimize a single criterion) but both means
            # are still reported
            kept = [(nm, float(gv)) for nm, gv in ((name_a, ga), (name_b, gb)) if float(gv) != 0.0]
            if not kept:
                raise errors.ConfigError("grid point needs at least one positive importance")
            spec = CriterionSpec.normalized(
                tuple(nm for nm, _ in kept), tuple(gv for _, gv in kept)
            )
            layouts = _run_cell(dataset, inits, spec, strategy, engine, engine_config, seed)
            va = [_criterion_value(name_a, g, x, c) for g, x, c in zip(dataset, layouts, caches)]
            vb = [_criterion_value(name_b, g, x, c) for g, x, c in zip(dataset, layouts, caches)]
            points.append(
                ParetoPoint(
                    strategy=strategy,
                    gamma_a=float(ga),
                    gamma_b=float(gb),
                    mean_loss_a=float(np.mean(va)),
                    mean_loss_b=float(np.mean(vb)),
                )
            )
    points.sort(key=lambda p: (p.strategy, p.gamma_a, p.gamma_b))
    return points


def _run_cell(dataset, inits, spec: CriterionSpec, strategy: str, engine: str, engine_config, seed: int):
    if engine == "direct":
        cfg = engine_config if engine_config is not None else DescentConfig()
        cfg = replace(cfg, spec=spec, strategy=strategy, seed=seed)
        return [optimize_layout(g, x0, cfg)[0] for g, x0 in zip(dataset, inits)]
    from .model import TrainConfig, infer, train

    cfg = engine_config if engine_config is not None else TrainConfig()
    cfg = replace(cfg, spec=spec, strategy=strategy, seed=seed)
    params, _ = train(list(dataset), cfg)
    return [infer(g, params, init=cfg.init, seed=seed) for g in dataset]


def timed_layout(fn, *args, **kwargs) -> tuple[np.ndarray, float]:
    """Run a layout callable and report (layout, wall seconds)."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
