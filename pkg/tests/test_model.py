"""Layout model: aggregation closed forms, forward contracts, training loop."""

import numpy as np
import pytest
from sklearn.base import clone

from gdlab import errors
from gdlab.autodiff import backward, inject_scalar
from gdlab.graphs import Graph, augment, generate_synthetic, shortest_paths
from gdlab.losses import edge_var_loss, stress_loss
from gdlab.model import (
    GNNLayout,
    LayoutModelParams,
    ModelConfig,
    TrainConfig,
    _build_batch,
    _forward_batch,
    block_edge_features,
    edge_net_forward,
    infer,
    message_aggregation,
    model_forward,
    train,
)
from gdlab.nn import DenseParams
from gdlab.autodiff import leaf
from gdlab.weighting import CriterionSpec, composite_loss

SMALL = ModelConfig(n_interior_blocks=2, layers_per_block=2, hidden_dim=8, edge_hidden=8)


def prepared(kind, n, seed=0):
    g = generate_synthetic(kind, n, seed=seed)
    d = shortest_paths(g).astype(float)
    return g, d, augment(g, d)


# ---------------------------------------------------------------- aggregation


def test_aggregation_identity_maps_give_neighbor_mean():
    g, d, ag = prepared("cycle", 5)
    f = 3
    rng = np.random.default_rng(1)
    h = rng.normal(size=(5, f))
    phi = np.tile(np.eye(f).reshape(1, f * f), (ag.src.size, 1))
    w = DenseParams(w=leaf(np.zeros((f, f))), b=leaf(np.zeros(f)))
    out = message_aggregation(ag, h, None, w, phi)
    expected = np.stack([(h.sum(axis=0) - h[v]) / (g.n - 1) for v in range(g.n)])
    assert np.max(np.abs(out.data - expected)) < 1e-12


def test_aggregation_zero_maps_identity_weights_pass_through():
    g, d, ag = prepared("path", 4)
    f = 2
    h = np.arange(8.0).reshape(4, 2)
    phi = np.zeros((ag.src.size, f * f))
    w = DenseParams(w=leaf(np.eye(f)), b=leaf(np.zeros(f)))
    out = message_aggregation(ag, h, None, w, phi)
    assert np.array_equal(out.data, h)


def test_aggregation_single_node_empty_mean():
    g = Graph.from_edges(1, [])
    d = shortest_paths(g).astype(float)
    ag = augment(g, d)
    f = 2
    h = np.array([[3.0, -1.0]])
    w = DenseParams(w=leaf(2.0 * np.eye(f)), b=leaf(np.zeros(f)))
    out = message_aggregation(ag, h, None, w, np.zeros((0, f * f)))
    assert np.array_equal(out.data, 2.0 * h)


# ---------------------------------------------------------------- edge features


def test_block_edge_features_closed_form():
    h = np.array([[0.0, 0.0], [3.0, 4.0]])
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    e = block_edge_features(h, d)
    # two directed edges, destination-major: (src=1,dst=0) then (src=0,dst=1)
    assert e.shape == (2, 4)
    assert np.allclose(e[0], [1.0, 0.6, 0.8, 5.0], atol=1e-12)
    assert np.allclose(e[1], [1.0, -0.6, -0.8, 5.0], atol=1e-12)


def test_block_edge_features_coincident_rows_are_zero():
    h = np.zeros((3, 2))
    d = shortest_paths(generate_synthetic("path", 3, seed=0)).astype(float)
    e = block_edge_features(h, d)
    assert np.all(e[:, 1:] == 0.0)  # direction and distance vanish
    assert np.all(e[:, 0] > 0.0)  # hop distances stay


def test_block_edge_features_width_is_f_plus_2():
    for f in (2, 5, 8):
        h = np.random.default_rng(f).normal(size=(4, f))
        d = shortest_paths(generate_synthetic("cycle", 4, seed=0)).astype(float)
        e = block_edge_features(h, d)
        assert e.shape == (4 * 3, f + 2)


def test_edge_net_outputs_strictly_inside_unit_interval():
    rng = np.random.default_rng(3)
    from gdlab.model import EdgeFeatureNetParams

    phi = EdgeFeatureNetParams.create(4, 8, 8, 8, "leaky_relu", rng)
    e = leaf(rng.normal(size=(40, 4)))
    out = edge_net_forward(e, phi)
    assert out.data.shape == (40, 64)
    assert np.all(np.abs(out.data) < 1.0)


# ---------------------------------------------------------------- forward


def test_forward_shape_and_finite():
    g, d, ag = prepared("random_connected", 9, seed=2)
    p = LayoutModelParams.create(SMALL, seed=0)
    x0 = np.random.default_rng(0).normal(size=(9, 2))
    out = model_forward(ag, x0, p)
    assert out.shape == (9, 2)
    assert np.all(np.isfinite(out))


def test_forward_deterministic_bit_identical():
    g, d, ag = prepared("random_tree", 8, seed=3)
    x0 = np.random.default_rng(1).normal(size=(8, 2))
    outs = []
    for _ in range(2):
        p = LayoutModelParams.create(SMALL, seed=7)
        outs.append(model_forward(ag, x0, p))
    assert np.array_equal(outs[0], outs[1])


def test_residual_flag_changes_output():
    g, d, ag = prepared("random_connected", 8, seed=5)
    x0 = np.random.default_rng(2).normal(size=(8, 2))
    base = model_forward(ag, x0, LayoutModelParams.create(SMALL, seed=1))
    ablated_cfg = ModelConfig(
        n_interior_blocks=2, layers_per_block=2, hidden_dim=8, edge_hidden=8, use_residual=False
    )
    ablated = model_forward(ag, x0, LayoutModelParams.create(ablated_cfg, seed=1))
    assert np.max(np.abs(base - ablated)) > 1e-9


def test_virtual_edge_ablation_restricts_neighbor_sets():
    g, d, ag = prepared("path", 5)
    full = _build_batch([ag], use_virtual_edges=True)
    real = _build_batch([ag], use_virtual_edges=False)
    assert full.counts.tolist() == [4, 4, 4, 4, 4]
    assert np.array_equal(real.counts, g.degrees)
    # every kept edge is a real adjacency
    assert np.all(d[real.src, real.dst] == 1.0)


def test_forward_permutation_equivariance():
    g, d, ag = prepared("random_connected", 7, seed=9)
    rng = np.random.default_rng(4)
    x0 = rng.normal(size=(7, 2))
    p = LayoutModelParams.create(SMALL, seed=2)
    out1 = model_forward(ag, x0, p)

    perm = rng.permutation(7)
    g2 = Graph.from_edges(7, [(int(perm[u]), int(perm[v])) for u, v in g.edges])
    d2 = shortest_paths(g2).astype(float)
    ag2 = augment(g2, d2)
    x2 = np.empty_like(x0)
    x2[perm] = x0
    out2 = model_forward(ag2, x2, p)
    assert np.max(np.abs(out2[perm] - out1)) < 1e-9


def test_model_config_edge_dims_and_validation():
    assert ModelConfig(block_features="none").interior_edge_dim == 1
    assert ModelConfig(block_features="direction", hidden_dim=8).interior_edge_dim == 9
    assert ModelConfig(block_features="distance").interior_edge_dim == 2
    assert ModelConfig(block_features="both", hidden_dim=8).interior_edge_dim == 10
    with pytest.raises(errors.ConfigError):
        ModelConfig(layers_per_block=0)
    with pytest.raises(errors.ConfigError):
        ModelConfig(block_features="everything")
    with pytest.raises(errors.ConfigError):
        ModelConfig(hidden_activation="swish")


def test_parameter_count_is_positive_and_config_sensitive():
    small = LayoutModelParams.create(SMALL, seed=0).n_parameters()
    wide_cfg = ModelConfig(n_interior_blocks=2, layers_per_block=2, hidden_dim=16, edge_hidden=8)
    wide = LayoutModelParams.create(wide_cfg, seed=0).n_parameters()
    assert 0 < small < wide


# ---------------------------------------------------------------- end-to-end gradients


def test_end_to_end_parameter_gradients_match_fd():
    g, d, ag = prepared("random_connected", 6, seed=11)
    cfg = ModelConfig(n_interior_blocks=2, layers_per_block=2, hidden_dim=8, edge_hidden=8)
    params = LayoutModelParams.create(cfg, seed=3)
    tensors = params.tensors()
    x0 = np.random.default_rng(5).normal(size=(6, 2))
    batch = _build_batch([ag], cfg.use_virtual_edges)
    alpha = (0.5, 0.5)

    def composite_value():
        out = _forward_batch(batch, x0, params, training=True)
        evs = [stress_loss(out.data, d), edge_var_loss(out.data, g)]
        return composite_loss(evs, alpha), out

    comp, out = composite_value()
    root = inject_scalar(comp.value, out, comp.grad)
    for t in tensors:
        t.zero_grad()
    backward(root)

    rng = np.random.default_rng(17)
    picks = []
    for _ in range(20):
        ti = int(rng.integers(0, len(tensors)))
        flat = int(rng.integers(0, tensors[ti].data.size))
        picks.append((ti, flat))

    h = 1e-4
    analytic, fd = [], []
    for ti, flat in picks:
        t = tensors[ti]
        analytic.append(float(t.grad.reshape(-1)[flat]) if t.grad is not None else 0.0)
        orig = float(t.data.reshape(-1)[flat])
        t.data.reshape(-1)[flat] = orig + h
        up, _ = composite_value()
        t.data.reshape(-1)[flat] = orig - h
        dn, _ = composite_value()
        t.data.reshape(-1)[flat] = orig
        fd.append((up.value - dn.value) / (2 * h))
    analytic, fd = np.array(analytic), np.array(fd)
    assert np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-3


# ---------------------------------------------------------------- training


def tiny_train_cfg(**kw):
    base = dict(
        spec=CriterionSpec(("stress",), (1.0,)),
        strategy="adaptive",
        batch_size=4,
        epochs=2,
        lr0=0.01,
        init="pivotmds",
        seed=0,
        model=ModelConfig(n_interior_blocks=1, layers_per_block=2, hidden_dim=4, edge_hidden=4),
    )
    base.update(kw)
    return TrainConfig(**base)


def small_dataset(count=6, seed=0):
    rng = np.random.default_rng(seed)
    kinds = ["path", "cycle", "random_tree"]
    return [
        generate_synthetic(kinds[i % 3], int(rng.integers(5, 10)), seed=i) for i in range(count)
    ]


def test_train_lr_zero_keeps_parameters_and_records_history():
    cfg = tiny_train_cfg(lr0=0.0, epochs=1)
    params, history = train(small_dataset(), cfg)
    reference = LayoutModelParams.create(cfg.model, cfg.seed)
    for got, ref in zip(params.tensors(), reference.tensors()):
        assert np.array_equal(got.data, ref.data)
    assert history.criteria == ("stress",)
    assert len(history.rows) == 1
    row = history.rows[0]
    assert row.epoch == 0 and row.lr == 0.0
    assert row.alpha == (1.0,)
    assert all(np.isfinite(v) for v in row.mean_losses)


def test_train_fixed_single_criterion_alpha_is_one_everywhere():
    cfg = tiny_train_cfg(strategy="fixed", epochs=3)
    _, history = train(small_dataset(), cfg)
    assert all(row.alpha == (1.0,) for row in history.rows)


def test_train_is_deterministic_per_seed():
    runs = []
    for _ in range(2):
        params, history = train(small_dataset(), tiny_train_cfg(epochs=2))
        runs.append((params, history))
    for t1, t2 in zip(runs[0][0].tensors(), runs[1][0].tensors()):
        assert np.array_equal(t1.data, t2.data)
    assert runs[0][1] == runs[1][1]


def test_train_rejects_empty_and_oversized():
    with pytest.raises(errors.EmptyInput):
        train([], tiny_train_cfg())
    big = generate_synthetic("random_connected", 12, seed=0)
    with pytest.raises(errors.InvalidSize):
        train([big], tiny_train_cfg(max_nodes=10))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_aborts_with_diagnostics_on_divergence():
    cfg = tiny_train_cfg(lr0=1e160, weight_decay=0.0, epochs=4, batch_size=1)
    with pytest.raises(errors.NonFiniteLoss, match=r"graph \d+ at epoch \d+"):
        train(small_dataset(count=2), cfg)


def test_train_config_validation():
    with pytest.raises(errors.ConfigError):
        tiny_train_cfg(strategy="annealed")
    with pytest.raises(errors.ConfigError):
        tiny_train_cfg(init="spectral")
    with pytest.raises(errors.ConfigError):
        tiny_train_cfg(batch_size=0)


def test_tiny_training_run_descends():
    # 50 small path/tree graphs, 2 interior blocks, stress only, 30 epochs:
    # the last epoch's mean training stress must beat the first epoch's.
    rng = np.random.default_rng(0)
    dataset = [
        generate_synthetic(["path", "random_tree"][i % 2], int(rng.integers(8, 17)), seed=100 + i)
        for i in range(50)
    ]
    cfg = TrainConfig(
        spec=CriterionSpec(("stress",), (1.0,)),
        strategy="adaptive",
        batch_size=16,
        epochs=30,
        lr0=0.01,
        init="pivotmds",
        seed=1,
        model=ModelConfig(n_interior_blocks=2, layers_per_block=3, hidden_dim=8, edge_hidden=8),
    )
    _, history = train(dataset, cfg)
    first = history.rows[0].mean_losses[0]
    last = history.rows[-1].mean_losses[0]
    assert last < first


# ---------------------------------------------------------------- inference


def test_infer_deterministic_and_finite():
    g = generate_synthetic("random_connected", 10, seed=6)
    p = LayoutModelParams.create(SMALL, seed=4)  # untrained random weights
    a = infer(g, p, init="pivotmds", seed=3)
    b = infer(g, p, init="pivotmds", seed=3)
    assert np.array_equal(a, b)
    assert a.shape == (10, 2) and np.all(np.isfinite(a))
    r = infer(g, p, init="random", seed=3)
    assert r.shape == (10, 2) and np.all(np.isfinite(r))


def test_infer_handles_hundred_nodes():
    g = generate_synthetic("random_connected", 100, seed=1)
    p = LayoutModelParams.create(SMALL, seed=0)
    out = infer(g, p, init="random", seed=0)
    assert out.shape == (100, 2) and np.all(np.isfinite(out))


def test_infer_rejects_unknown_init():
    g = generate_synthetic("path", 4, seed=0)
    p = LayoutModelParams.create(SMALL, seed=0)
    with pytest.raises(errors.ConfigError):
        infer(g, p, init="circular", seed=0)


# ---------------------------------------------------------------- estimator facade


def test_estimator_get_set_params_and_clone():
    est = GNNLayout(epochs=2, n_interior_blocks=1, hidden_dim=4, edge_hidden=4, batch_size=4)
    params = est.get_params()
    assert params["epochs"] == 2 and params["hidden_dim"] == 4
    est2 = clone(est)
    assert est2.get_params() == params
    est2.set_params(epochs=5)
    assert est2.epochs == 5 and est.epochs == 2


def test_estimator_fit_transform_roundtrip():
    est = GNNLayout(
        epochs=2,
        batch_size=4,
        n_interior_blocks=1,
        layers_per_block=2,
        hidden_dim=4,
        edge_hidden=4,
        seed=0,
    )
    data = small_dataset(count=4)
    outs = est.fit_transform(data)
    assert len(outs) == 4
    for g, x in zip(data, outs):
        assert x.shape == (g.n, 2) and np.all(np.isfinite(x))
    assert est.history_.criteria == ("stress",)
    again = est.predict(data)
    for a, b in zip(outs, again):
        assert np.array_equal(a, b)


def test_estimator_transform_requires_fit():
    with pytest.raises(errors.ConfigError):
        GNNLayout().transform(small_dataset(count=1))
