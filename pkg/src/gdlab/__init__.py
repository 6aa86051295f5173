"""gdlab: a graph layout laboratory.

Differentiable aesthetic criteria with analytic gradients, classical
spectral/majorization solvers, a from-scratch autodiff tape powering a
message-passing neural layout model, direct position optimization, and the
evaluation/CLI plumbing to compare them.
"""

from . import errors
from .baselines import PivotMDS, StressMajorization, random_init
from .descent import DescentConfig, DirectLayoutOptimizer, Trajectory, optimize_layout
from .graphs import (
    SYNTHETIC_KINDS,
    AugmentedGraph,
    Graph,
    augment,
    format_edge_list,
    format_graphml,
    generate_synthetic,
    parse_edge_list,
    parse_graphml,
    shortest_paths,
    synthetic_dataset,
)
from .losses import (
    CRITERIA,
    LossEvaluation,
    TsneAffinities,
    angle_loss,
    default_perplexity,
    edge_var_loss,
    finite_difference_gradient,
    occlusion_loss,
    stress_loss,
    tsne_affinities,
    tsne_loss,
)
from .metrics import MetricsReport, ParetoPoint, evaluate_layout, pareto_sweep, spc
from .model import (
    LayoutModelParams,
    GNNLayout,
    ModelConfig,
    TrainConfig,
    TrainHistory,
    block_edge_features,
    model_forward,
    infer,
    message_aggregation,
    train,
)
from .svg import SvgStyle, render_svg
from .weighting import (
    CriterionSpec,
    WeightState,
    adaptive_weights,
    composite_loss,
    fixed_weights,
    softadapt_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedGraph",
    "CRITERIA",
    "CriterionSpec",
    "LayoutModelParams",
    "DescentConfig",
    "DirectLayoutOptimizer",
    "GNNLayout",
    "Graph",
    "LossEvaluation",
    "MetricsReport",
    "ModelConfig",
    "ParetoPoint",
    "PivotMDS",
    "StressMajorization",
    "SvgStyle",
    "SYNTHETIC_KINDS",
    "TrainConfig",
    "TrainHistory",
    "Trajectory",
    "TsneAffinities",
    "WeightState",
    "adaptive_weights",
    "angle_loss",
    "augment",
    "block_edge_features",
    "composite_loss",
    "model_forward",
    "default_perplexity",
    "edge_var_loss",
    "errors",
    "evaluate_layout",
    "finite_difference_gradient",
    "fixed_weights",
    "format_edge_list",
    "format_graphml",
    "generate_synthetic",
    "infer",
    "message_aggregation",
    "occlusion_loss",
    "optimize_layout",
    "pareto_sweep",
    "parse_edge_list",
    "parse_graphml",
    "random_init",
    "render_svg",
    "shortest_paths",
    "softadapt_weights",
    "spc",
    "stress_loss",
    "synthetic_dataset",
    "train",
    "tsne_affinities",
    "tsne_loss",
]
