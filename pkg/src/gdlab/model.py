"""Neural layout model: edge-conditioned message passing over the complete
digraph of an augmented graph, arranged as input block, residual interior
blocks, and a linear output block producing 2D coordinates.

Every directed edge carries a feature vector; a small two-layer edge network
maps it to a projection matrix (entries in (-1, 1) via tanh) that transforms
the source node's embedding before neighbor-mean aggregation. Interior
blocks recompute their edge features from their own input embeddings
(hop distance, embedding-space direction, embedding-space distance), so the
features stay differentiable end to end.

Training minimizes the weighted aesthetic composite: criterion losses and
their exact analytic position gradients are computed outside the tape and
enter it through a single scalar injection node, then flow back through the
network via reverse-mode autodiff into an AdamW update.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator

from . import errors
from ._rng import stream
from .autodiff import (
    Tensor,
    add,
    backward,
    concat_cols,
    constant,
    edge_matvec,
    gather_rows,
    inject_scalar,
    row_norms,
    segment_mean,
    sub,
    unit_rows,
)
from .baselines import PivotMDS, random_init
from .graphs import AugmentedGraph, Graph, augment, shortest_paths
from .losses import (
    LossEvaluation,
    TsneAffinities,
    angle_loss,
    edge_var_loss,
    occlusion_loss,
    stress_loss,
    tsne_affinities,
    tsne_loss,
)
from .nn import (
    AdamWState,
    BatchNormState,
    DenseParams,
    activation,
    adamw_step,
    batch_norm,
    dense_forward,
    lr_schedule,
)
from .validation import check_layout
from .weighting import CriterionSpec, WeightState, adaptive_weights, composite_loss, fixed_weights, softadapt_weights

BLOCK_FEATURES = ("none", "direction", "distance", "both")
STRATEGIES = ("fixed", "adaptive", "softadapt")
INITS = ("random", "pivotmds")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs; defaults follow the reference configuration."""

    n_interior_blocks: int = 9
    layers_per_block: int = 3
    hidden_dim: int = 8
    edge_hidden: int = 8
    hidden_activation: str = "leaky_relu"
    use_residual: bool = True
    use_virtual_edges: bool = True
    block_features: str = "both"
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        if self.n_interior_blocks < 0 or self.layers_per_block < 1:
            raise errors.ConfigError("block counts must be positive")
        if self.hidden_dim < 1 or self.edge_hidden < 1:
            raise errors.ConfigError("widths must be positive")
        if self.hidden_activation not in ("relu", "leaky_relu", "tanh"):
            raise errors.ConfigError(f"unknown activation {self.hidden_activation!r}")
        if self.block_features not in BLOCK_FEATURES:
            raise errors.ConfigError(f"unknown block feature set {self.block_features!r}")

    @property
    def interior_edge_dim(self) -> int:
        dim = 1  # hop distance is always present
        if self.block_features in ("direction", "both"):
            dim += self.hidden_dim
        if self.block_features in ("distance", "both"):
            dim += 1
        return dim


@dataclass
class EdgeFeatureNetParams:
    """Two dense layers mapping an edge feature vector to a flattened
    f_in x f_out projection matrix; tanh keeps entries strictly in (-1, 1)."""

    hidden: DenseParams
    out: DenseParams
    f_in: int
    f_out: int
    hidden_activation: str = "leaky_relu"

    @classmethod
    def create(cls, edge_dim: int, f_in: int, f_out: int, hidden_width: int, hidden_activation: str, rng: np.random.Generator) -> "EdgeFeatureNetParams":
        return cls(
            hidden=DenseParams.create(edge_dim, hidden_width, rng),
            out=DenseParams.create(hidden_width, f_in * f_out, rng),
            f_in=f_in,
            f_out=f_out,
            hidden_activation=hidden_activation,
        )

    def tensors(self) -> list[Tensor]:
        return self.hidden.tensors() + self.out.tensors()


def edge_net_forward(e: Tensor, phi: EdgeFeatureNetParams) -> Tensor:
    """Projection entries for every edge, shape (E, f_in*f_out), in (-1, 1)."""
    h = activation(dense_forward(e, phi.hidden), phi.hidden_activation)
    return activation(dense_forward(h, phi.out), "tanh")


@dataclass
class LayerParams:
    """One aggregation layer: self map, edge network, optional batch norm."""

    w: DenseParams
    edge_net: EdgeFeatureNetParams
    bn: BatchNormState | None

    def tensors(self) -> list[Tensor]:
        ts = self.w.tensors() + self.edge_net.tensors()
        if self.bn is not None:
            ts += self.bn.tensors()
        return ts


@dataclass
class LayoutModelParams:
    """All learnable state: input block, interior blocks, output block."""

    config: ModelConfig
    input_block: list[LayerParams]
    interior: list[list[LayerParams]]
    output_block: list[LayerParams]

    @classmethod
    def create(cls, config: ModelConfig, seed: int) -> "LayoutModelParams":
        rng = stream(seed, "model-params")
        f = config.hidden_dim

        def layer(edge_dim, f_in, f_out, with_bn=True):
            return LayerParams(
                w=DenseParams.create(f_in, f_out, rng),
                edge_net=EdgeFeatureNetParams.create(edge_dim, f_in, f_out, config.edge_hidden, config.hidden_activation, rng),
                bn=BatchNormState.create(f_out, config.bn_momentum, config.bn_eps) if with_bn else None,
            )

        input_block = [layer(1, 2, f), layer(1, f, f)]
        interior = [
            [layer(config.interior_edge_dim, f, f) for _ in range(config.layers_per_block)]
            for _ in range(config.n_interior_blocks)
        ]
        output_block = [layer(1, f, f), layer(1, f, 2, with_bn=False)]
        return cls(config=config, input_block=input_block, interior=interior, output_block=output_block)

    def layers(self) -> list[LayerParams]:
        out = list(self.input_block)
        for block in self.interior:
            out.extend(block)
        out.extend(self.output_block)
        return out

    def tensors(self) -> list[Tensor]:
        ts: list[Tensor] = []
        for lp in self.layers():
            ts.extend(lp.tensors())
        return ts

    def n_parameters(self) -> int:
        return int(sum(t.data.size for t in self.tensors()))


@dataclass(frozen=True)
class _Batch:
    """Edge index of a disjoint union of augmented graphs.

    Edges are destination-major: each global node's incoming edges form one
    contiguous run (offsets/counts), which makes neighbor means a segment
    reduction.
    """

    src: np.ndarray
    dst: np.ndarray
    dist: np.ndarray
    offsets: np.ndarray
    counts: np.ndarray
    node_slices: tuple[tuple[int, int], ...]

    @property
    def n_nodes(self) -> int:
        return int(self.counts.size)


def _build_batch(ags: list[AugmentedGraph], use_virtual_edges: bool) -> _Batch:
    srcs, dsts, dists, counts = [], [], [], []
    slices = []
    off = 0
    for ag in ags:
        n = ag.n
        keep = slice(None) if use_virtual_edges else ag.is_real
        srcs.append(ag.src[keep] + off)
        dsts.append(ag.dst[keep] + off)
        dists.append(ag.dist[keep])
        counts.append(np.bincount(ag.dst[keep], minlength=n))
        slices.append((off, n))
        off += n
    counts_all = np.concatenate(counts) if counts else np.zeros(0, dtype=np.int64)
    offsets = np.zeros_like(counts_all)
    if counts_all.size:
        offsets[1:] = np.cumsum(counts_all)[:-1]
    return _Batch(
        src=np.concatenate(srcs) if srcs else np.zeros(0, dtype=np.int64),
        dst=np.concatenate(dsts) if dsts else np.zeros(0, dtype=np.int64),
        dist=np.concatenate(dists) if dists else np.zeros(0, dtype=np.float64),
        offsets=offsets,
        counts=counts_all,
        node_slices=tuple(slices),
    )


def _aggregate(h: Tensor, e: Tensor, lp: LayerParams, batch: _Batch, phi_out: Tensor | None = None) -> Tensor:
    """One aggregation: h_v W + mean over incoming edges of phi(e_uv) h_u."""
    t = phi_out if phi_out is not None else edge_net_forward(e, lp.edge_net)
    f_out = lp.w.w.data.shape[1]
    msg = edge_matvec(gather_rows(h, batch.src), t, f_out)
    m = segment_mean(msg, batch.offsets, batch.counts)
    return add(dense_forward(h, lp.w), m)


def message_aggregation(ag: AugmentedGraph, h, e, w: DenseParams, phi) -> Tensor:
    """Single-layer aggregation over one augmented graph.

    `phi` may be EdgeFeatureNetParams or a precomputed (E, f_in*f_out)
    array of projection entries (handy for closed-form tests and ablations).
    `h` and `e` may be Tensors or plain arrays.
    """
    batch = _build_batch([ag], use_virtual_edges=True)
    ht = h if isinstance(h, Tensor) else constant(np.asarray(h, dtype=np.float64))
    if isinstance(phi, EdgeFeatureNetParams):
        et = e if isinstance(e, Tensor) else constant(np.asarray(e, dtype=np.float64))
        return _aggregate(ht, et, LayerParams(w=w, edge_net=phi, bn=None), batch)
    t = constant(np.asarray(phi, dtype=np.float64))
    return _aggregate(ht, constant(np.zeros((batch.src.size, 1))), LayerParams(w=w, edge_net=None, bn=None), batch, phi_out=t)


def _interior_edge_features(h: Tensor, batch: _Batch, config: ModelConfig) -> Tensor:
    """Edge features recomputed from the block's input embeddings."""
    parts: list[Tensor] = [constant(batch.dist[:, None])]
    if config.block_features == "none":
        return parts[0]
    diff = sub(gather_rows(h, batch.src), gather_rows(h, batch.dst))
    if config.block_features in ("direction", "both"):
        parts.append(unit_rows(diff))
    if config.block_features in ("distance", "both"):
        parts.append(row_norms(diff))
    return concat_cols(parts)


def block_edge_features(h, d) -> np.ndarray:
    """Interior-block edge features over the complete digraph, one row per
    directed edge in destination-major order: hop distance, embedding-space
    direction (zero for coincident embeddings), embedding-space distance."""
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    dst = np.repeat(np.arange(n), n - 1)
    src = np.concatenate([np.delete(np.arange(n), v) for v in range(n)]) if n > 1 else np.zeros(0, dtype=np.int64)
    diff = h[src] - h[dst]
    r = np.linalg.norm(diff, axis=1, keepdims=True)
    unit = np.where(r > 0.0, diff / np.where(r > 0.0, r, 1.0), 0.0)
    hop = np.asarray(d, dtype=np.float64)[src, dst][:, None]
    return np.concatenate([hop, unit, r], axis=1)


def _forward_batch(batch: _Batch, x_init: np.ndarray, p: LayoutModelParams, training: bool) -> Tensor:
    cfg = p.config
    hop = constant(batch.dist[:, None])

    def run_layer(h, e, lp, last=False):
        out = _aggregate(h, e, lp, batch)
        if last:
            return out
        if lp.bn is not None:
            out = batch_norm(out, lp.bn, training)
        return activation(out, cfg.hidden_activation)

    h = constant(x_init)
    for lp in p.input_block:
        h = run_layer(h, hop, lp)
    for block in p.interior:
        e = _interior_edge_features(h, batch, cfg)
        h_in = h
        for lp in block:
            h = run_layer(h, e, lp)
        if cfg.use_residual:
            h = add(h, h_in)
    h = run_layer(h, hop, p.output_block[0])
    h = run_layer(h, hop, p.output_block[1], last=True)
    return h


def model_forward(ag: AugmentedGraph, x_init, p: LayoutModelParams, training: bool = False) -> np.ndarray:
    """Full forward pass for one graph; returns the n x 2 layout."""
    x_init = check_layout(x_init, ag.n)
    batch = _build_batch([ag], p.config.use_virtual_edges)
    return _forward_batch(batch, x_init, p, training).data.copy()


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides the dataset."""

    spec: CriterionSpec = field(default_factory=lambda: CriterionSpec(("stress",), (1.0,)))
    strategy: str = "adaptive"
    beta: float = 0.1
    tau: float = 0.9
    batch_size: int = 16
    epochs: int = 50
    lr0: float = 0.01
    decay: float = 0.99
    weight_decay: float = 0.01
    init: str = "pivotmds"
    seed: int = 0
    max_nodes: int = 100
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise errors.ConfigError(f"unknown strategy {self.strategy!r}")
        if self.init not in INITS:
            raise errors.ConfigError(f"unknown init {self.init!r}")
        if self.batch_size < 1 or self.epochs < 1 or self.max_nodes < 1:
            raise errors.ConfigError("counts must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_losses: tuple[float, ...]
    alpha: tuple[float, ...]
    lr: float


@dataclass(frozen=True)
class TrainHistory:
    criteria: tuple[str, ...]
    rows: tuple[EpochRecord, ...]


def _prepare_graph(g: Graph, cfg: TrainConfig, index: int):
    d = shortest_paths(g).astype(np.float64)
    ag = augment(g, d)
    if cfg.init == "pivotmds":
        x0 = PivotMDS(random_state=cfg.seed).fit(d).embedding_
    else:
        x0 = random_init(g.n, cfg.seed + index)
    aff = tsne_affinities(d) if "tsne" in cfg.spec.criteria and g.n >= 2 else None
    return {"g": g, "d": d, "ag": ag, "x0": x0, "aff": aff}


def _criterion_eval(name: str, x: np.ndarray, prep) -> LossEvaluation:
    if name == "stress":
        return stress_loss(x, prep["d"])
    if name == "tsne":
        if prep["aff"] is None:
            return LossEvaluation(0.0, np.zeros_like(x))
        return tsne_loss(x, prep["aff"])
    if name == "angle":
        return angle_loss(x, prep["g"])
    if name == "edge_var":
        return edge_var_loss(x, prep["g"])
    if name == "occlusion":
        return occlusion_loss(x)
    raise errors.ConfigError(f"unknown criterion {name!r}")


def _next_alpha(cfg: TrainConfig, epoch_means: np.ndarray, state: WeightState) -> tuple[np.ndarray, WeightState]:
    gamma = np.asarray(cfg.spec.gamma)
    if cfg.strategy == "fixed":
        return fixed_weights(gamma), state
    if cfg.strategy == "adaptive":
        alpha = adaptive_weights(gamma, epoch_means)
        return alpha, replace(state, alpha=tuple(float(v) for v in alpha), epoch=state.epoch + 1)
    return softadapt_weights(gamma, state, epoch_means, beta=cfg.beta, tau=cfg.tau)


def train(dataset: list[Graph], cfg: TrainConfig) -> tuple[LayoutModelParams, TrainHistory]:
    """Mini-batch training of the layout model on the given graphs.

    Each batch is forwarded as one disjoint union (batch normalization pools
    all of its nodes); per-graph criterion losses are evaluated analytically
    on the emitted coordinates, averaged, weighted by the current alpha, and
    injected into the tape as a single scalar whose backward pass carries
    the exact position gradient into the network parameters. Weights alpha
    are advanced once per epoch from that epoch's mean losses.
    """
    if not dataset:
        raise errors.EmptyInput("training needs at least one graph")
    for i, g in enumerate(dataset):
        if g.n > cfg.max_nodes:
            raise errors.InvalidSize(f"graph {i} has {g.n} > max_nodes={cfg.max_nodes} nodes")

    preps = [_prepare_graph(g, cfg, i) for i, g in enumerate(dataset)]
    params = LayoutModelParams.create(cfg.model, cfg.seed)
    tensors = params.tensors()
    opt = AdamWState.create([t.data for t in tensors])
    shuffle_rng = stream(cfg.seed, "train-shuffle")

    criteria = cfg.spec.criteria
    alpha = np.asarray(cfg.spec.gamma)
    wstate = WeightState.initial(cfg.spec.gamma)
    rows: list[EpochRecord] = []

    for epoch in range(cfg.epochs):
        lr = lr_schedule(cfg.lr0, cfg.decay, epoch)
        order = shuffle_rng.permutation(len(preps))
        epoch_sums = np.zeros(len(criteria))
        seen = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            group = [preps[i] for i in idx]
            batch = _build_batch([pr["ag"] for pr in group], cfg.model.use_virtual_edges)
            x_init = np.concatenate([pr["x0"] for pr in group], axis=0)
            out = _forward_batch(batch, x_init, params, training=True)

            b = len(group)
            if not np.all(np.isfinite(out.data)):
                bad = next(
                    int(idx[j])
                    for j, (s, n) in enumerate(batch.node_slices)
                    if not np.all(np.isfinite(out.data[s : s + n]))
                )
                raise errors.NonFiniteLoss(
                    f"model output non-finite on graph {bad} at epoch {epoch}"
                )
            evals: list[LossEvaluation] = []
            for k, name in enumerate(criteria):
                grad = np.zeros_like(out.data)
                total = 0.0
                for j, (s, n) in enumerate(batch.node_slices):
                    ev = _criterion_eval(name, out.data[s : s + n], group[j])
                    if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.grad)):
                        raise errors.NonFiniteLoss(
                            f"criterion {name!r} non-finite on graph {int(idx[j])} at epoch {epoch}"
                        )
                    total += ev.value
                    grad[s : s + n] = ev.grad / b
                evals.append(LossEvaluation(total / b, grad))
                epoch_sums[k] += total
            seen += b

            comp = composite_loss(evals, alpha)
            if not np.isfinite(comp.value):
                raise errors.NonFiniteLoss(f"composite loss non-finite at epoch {epoch}")
            root = inject_scalar(comp.value, out, comp.grad)
            for t in tensors:
                t.zero_grad()
            backward(root)
            grads = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]
            new = adamw_step([t.data for t in tensors], grads, opt, lr, cfg.weight_decay)
            for t, arr in zip(tensors, new):
                t.data = arr
                t.zero_grad()

        means = epoch_sums / seen
        rows.append(EpochRecord(epoch=epoch, mean_losses=tuple(float(v) for v in means), alpha=tuple(float(v) for v in alpha), lr=lr))
        alpha, wstate = _next_alpha(cfg, means, wstate)

    return params, TrainHistory(criteria=criteria, rows=tuple(rows))


def infer(g: Graph, p: LayoutModelParams, init: str = "pivotmds", seed: int = 0) -> np.ndarray:
    """Lay out one graph with a trained model (inference-mode batch norm)."""
    if init not in INITS:
        raise errors.ConfigError(f"unknown init {init!r}")
    d = shortest_paths(g).astype(np.float64)
    ag = augment(g, d)
    x0 = PivotMDS(random_state=seed).fit(d).embedding_ if init == "pivotmds" else random_init(g.n, seed)
    return model_forward(ag, x0, p, training=False)


class GNNLayout(BaseEstimator):
    """Estimator facade: fit trains the message-passing layout model on a
    list of graphs; transform lays out new graphs with the trained weights.

    Parameters mirror TrainConfig/ModelConfig; fitted state lives in
    params_ and history_.
    """

    def __init__(
        self,
        criteria=("stress",),
        gamma=(1.0,),
        strategy: str = "adaptive",
        beta: float = 0.1,
        tau: float = 0.9,
        batch_size: int = 16,
        epochs: int = 50,
        lr0: float = 0.01,
        decay: float = 0.99,
        weight_decay: float = 0.01,
        init: str = "pivotmds",
        seed: int = 0,
        max_nodes: int = 100,
        n_interior_blocks: int = 9,
        layers_per_block: int = 3,
        hidden_dim: int = 8,
        edge_hidden: int = 8,
        hidden_activation: str = "leaky_relu",
        use_residual: bool = True,
        use_virtual_edges: bool = True,
        block_features: str = "both",
    ):
        self.criteria = criteria
        self.gamma = gamma
        self.strategy = strategy
        self.beta = beta
        self.tau = tau
        self.batch_size = batch_size
        self.epochs = epochs
        self.lr0 = lr0
        self.decay = decay
        self.weight_decay = weight_decay
        self.init = init
        self.seed = seed
        self.max_nodes = max_nodes
        self.n_interior_blocks = n_interior_blocks
        self.layers_per_block = layers_per_block
        self.hidden_dim = hidden_dim
        self.edge_hidden = edge_hidden
        self.hidden_activation = hidden_activation
        self.use_residual = use_residual
        self.use_virtual_edges = use_virtual_edges
        self.block_features = block_features

    def _config(self) -> TrainConfig:
        return TrainConfig(
            spec=CriterionSpec(tuple(self.criteria), tuple(float(v) for v in self.gamma)),
            strategy=self.strategy,
            beta=self.beta,
            tau=self.tau,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lr0=self.lr0,
            decay=self.decay,
            weight_decay=self.weight_decay,
            init=self.init,
            seed=self.seed,
            max_nodes=self.max_nodes,
            model=ModelConfig(
                n_interior_blocks=self.n_interior_blocks,
                layers_per_block=self.layers_per_block,
                hidden_dim=self.hidden_dim,
                edge_hidden=self.edge_hidden,
                hidden_activation=self.hidden_activation,
                use_residual=self.use_residual,
                use_virtual_edges=self.use_virtual_edges,
                block_features=self.block_features,
            ),
        )

    def fit(self, graphs: list[Graph], y=None) -> "GNNLayout":
        self.params_, self.history_ = train(list(graphs), self._config())
        return self

    def transform(self, graphs: list[Graph]) -> list[np.ndarray]:
        if not hasattr(self, "params_"):
            raise errors.ConfigError("estimator is not fitted")
        return [infer(g, self.params_, init=self.init, seed=self.seed) for g in graphs]

    def predict(self, graphs: list[Graph]) -> list[np.ndarray]:
        return self.transform(graphs)

    def fit_transform(self, graphs: list[Graph], y=None) -> list[np.ndarray]:
        return self.fit(graphs, y).transform(graphs)
