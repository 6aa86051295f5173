"""Aesthetic criteria: closed forms, brute-force oracles, gradient checks."""

import numpy as np
import pytest

from gdlab import errors
from gdlab.graphs import Graph, generate_synthetic, parse_edge_list, shortest_paths
from gdlab.losses import (
    LossEvaluation,
    _perturb_until_separated,
    angle_loss,
    default_perplexity,
    edge_var_loss,
    finite_difference_gradient,
    occlusion_loss,
    stress_loss,
    tsne_affinities,
    tsne_loss,
)


def brute_force_stress(x, d):
    """Independent double-loop oracle: sum over u < v of (r - d)^2 / d^2."""
    n = x.shape[0]
    total = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            r = float(np.hypot(x[u, 0] - x[v, 0], x[u, 1] - x[v, 1]))
            total += (r - d[u, v]) ** 2 / d[u, v] ** 2
    return total


def random_connected(rng):
    n = int(rng.integers(5, 21))
    kind = ["random_tree", "random_connected"][int(rng.integers(0, 2))]
    return generate_synthetic(kind, n, seed=int(rng.integers(0, 2**31)))


def rel_err(analytic, fd):
    denom = max(float(np.linalg.norm(fd)), 1e-12)
    return float(np.linalg.norm(analytic - fd)) / denom


# ---------------------------------------------------------------- stress


def test_stress_perfect_embedding_is_zero():
    x = np.array([[0.0, 0.0], [1.0, 0.0]])
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    ev = stress_loss(x, d)
    assert ev.value == 0.0
    assert np.all(ev.grad == 0.0)


def test_stress_single_pair_closed_form():
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    ev = stress_loss(x, d)
    assert ev.value == 1.0
    # hand-derived: dS/dx_u = 2 (r - d) (x_u - x_v) / r with w = 1
    assert np.allclose(ev.grad, [[-2.0, 0.0], [2.0, 0.0]], atol=1e-12)
    fd = finite_difference_gradient(lambda p: stress_loss(p, d).value, x, h=1e-5)
    assert np.max(np.abs(fd - ev.grad)) < 1e-6


def test_stress_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        g = random_connected(rng)
        d = shortest_paths(g).astype(float)
        x = rng.normal(size=(g.n, 2)) * 3.0
        ev = stress_loss(x, d)
        assert abs(ev.value - brute_force_stress(x, d)) < 1e-12 * max(1.0, ev.value)


def test_stress_coincident_pair_is_perturbed_not_fatal():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    d = shortest_paths(generate_synthetic("path", 3, seed=0)).astype(float)
    ev = stress_loss(x, d)
    # value matches the d(0,1)=1 mismatch at separation ~1e-9, not a crash
    assert np.isfinite(ev.value)
    assert abs(ev.value - brute_force_stress(x, d)) < 1e-5
    assert np.all(np.isfinite(ev.grad))


def test_stress_single_node_is_zero():
    ev = stress_loss(np.zeros((1, 2)), np.zeros((1, 1)))
    assert ev.value == 0.0 and ev.grad.shape == (1, 2)


def test_stress_shape_mismatch_raises():
    with pytest.raises(errors.DimensionMismatch):
        stress_loss(np.zeros((3, 2)), np.zeros((2, 2)))


# ---------------------------------------------------------------- affinities


def test_affinities_two_nodes_forced_half():
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    a = tsne_affinities(d, perplexity=1.0)
    assert a.p[0, 1] == 0.5 and a.p[1, 0] == 0.5
    assert a.p[0, 0] == 0.0 and a.p[1, 1] == 0.0


def test_affinities_sum_to_one():
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = random_connected(rng)
        d = shortest_paths(g).astype(float)
        a = tsne_affinities(d)
        assert abs(a.p.sum() - 1.0) < 1e-9


def test_affinities_star_leaves_exchangeable():
    edges = [(0, i) for i in range(1, 7)]
    g = Graph.from_edges(7, edges)
    d = shortest_paths(g).astype(float)
    a = tsne_affinities(d, perplexity=3.0)
    leaf_pairs = [a.p[i, j] for i in range(1, 7) for j in range(1, 7) if i != j]
    assert np.ptp(leaf_pairs) < 1e-12


def test_affinities_hit_target_perplexity():
    # nodes whose neighbor distances vary admit an exact bandwidth
    for g, perp in [
        (generate_synthetic("path", 12, seed=0), 3.0),
        (generate_synthetic("grid", 12, seed=0), None),
    ]:
        d = shortest_paths(g).astype(float)
        a = tsne_affinities(d, perplexity=perp)
        target = perp if perp is not None else default_perplexity(g.n)
        n = g.n
        hits = 0
        for i in range(n):
            row = np.delete(d[i], i)
            ties_at_min = int(np.sum(row == row.min()))
            if not ties_at_min <= target <= n - 1:
                continue  # entropy range excludes the target: boundary bandwidth
            d2 = row**2
            beta = 0.5 / a.sigma[i] ** 2
            logits = -beta * d2
            e = np.exp(logits - logits.max())
            p = e / e.sum()
            entropy = float(np.log(e.sum()) + beta * float(p @ (d2 - d2.min())))
            assert abs(np.exp(entropy) - target) < 1e-5
            hits += 1
        assert hits >= n // 2


def test_affinities_perplexity_out_of_range():
    d = shortest_paths(generate_synthetic("path", 5, seed=0)).astype(float)
    with pytest.raises(errors.PerplexityOutOfRange):
        tsne_affinities(d, perplexity=0.5)
    with pytest.raises(errors.PerplexityOutOfRange):
        tsne_affinities(d, perplexity=4.5)
    with pytest.raises(errors.PerplexityOutOfRange):
        tsne_affinities(np.zeros((1, 1)))


def test_default_perplexity_clamps():
    assert default_perplexity(2) == 1.0
    assert default_perplexity(13) == 4.0
    assert default_perplexity(500) == 30.0


# ---------------------------------------------------------------- tsne loss


def test_tsne_two_nodes_is_exactly_zero():
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    a = tsne_affinities(d, perplexity=1.0)
    for xy in ([[0.0, 0.0], [5.0, 1.0]], [[2.0, 2.0], [2.1, 2.0]]):
        ev = tsne_loss(np.array(xy), a)
        assert ev.value == 0.0


def test_tsne_nonnegative_and_positive_off_optimum():
    rng = np.random.default_rng(11)
    for _ in range(10):
        g = random_connected(rng)
        d = shortest_paths(g).astype(float)
        a = tsne_affinities(d)
        x = rng.normal(size=(g.n, 2))
        ev = tsne_loss(x, a)
        assert ev.value > 0.0  # random layouts never reproduce p exactly


def test_tsne_gradient_matches_finite_differences():
    g = generate_synthetic("random_connected", 6, seed=5)
    d = shortest_paths(g).astype(float)
    a = tsne_affinities(d)
    x = np.random.default_rng(9).normal(size=(6, 2))
    ev = tsne_loss(x, a)
    fd = finite_difference_gradient(lambda p: tsne_loss(p, a).value, x, h=1e-5)
    assert rel_err(ev.grad, fd) < 1e-4


def test_tsne_affinity_shape_mismatch():
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    a = tsne_affinities(d, perplexity=1.0)
    with pytest.raises(errors.DimensionMismatch):
        tsne_loss(np.zeros((3, 2)), a)


# ---------------------------------------------------------------- angle


def star(k):
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def test_angle_collinear_degree2_is_zero():
    g = star(2)
    x = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    assert angle_loss(x, g).value == 0.0


def test_angle_perpendicular_degree2_closed_form():
    g = star(2)
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    ev = angle_loss(x, g)
    # gaps pi/2 and 3pi/2 against target pi
    assert abs(ev.value - np.pi) < 1e-12
    fd = finite_difference_gradient(lambda p: angle_loss(p, g).value, x, h=1e-7)
    assert rel_err(ev.grad, fd) < 1e-4


def test_angle_uniform_fan_degree3_is_zero():
    g = star(3)
    ang = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    x = np.vstack([[0.0, 0.0], np.column_stack([np.cos(ang), np.sin(ang)])])
    assert angle_loss(x, g).value < 1e-12


def test_angle_degree_one_contributes_zero():
    g = parse_edge_list("0 1")
    x = np.array([[0.0, 0.0], [3.0, 4.0]])
    ev = angle_loss(x, g)
    assert ev.value == 0.0
    assert np.all(ev.grad == 0.0)


def test_angle_zero_length_edge_is_perturbed():
    g = parse_edge_list("0 1\n1 2")
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    ev = angle_loss(x, g)
    assert np.isfinite(ev.value) and np.all(np.isfinite(ev.grad))


# ---------------------------------------------------------------- edge length variation


def test_edge_var_unit_square_is_zero():
    g = generate_synthetic("cycle", 4, seed=0)
    x = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert edge_var_loss(x, g).value == 0.0


def test_edge_var_single_edge_closed_form():
    g = parse_edge_list("0 1")
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert edge_var_loss(x, g).value == 1.0


def test_edge_var_two_edges_closed_form():
    g = parse_edge_list("0 1\n1 2")
    x = np.array([[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]])
    assert edge_var_loss(x, g).value == 2.0


def test_edge_var_needs_an_edge():
    g = Graph.from_edges(1, [])
    with pytest.raises(errors.DimensionMismatch):
        edge_var_loss(np.zeros((1, 2)), g)


def test_edge_var_normalized_variant_is_scale_free():
    g = generate_synthetic("random_connected", 8, seed=1)
    x = np.random.default_rng(2).normal(size=(8, 2))
    base = edge_var_loss(x, g, normalize_mean=True)
    scaled = edge_var_loss(2.5 * x, g, normalize_mean=True)
    assert abs(base.value - scaled.value) < 1e-9
    fd = finite_difference_gradient(
        lambda p: edge_var_loss(p, g, normalize_mean=True).value, x, h=1e-5
    )
    assert rel_err(base.grad, fd) < 1e-4


# ---------------------------------------------------------------- occlusion


def test_occlusion_coincident_closed_forms():
    assert occlusion_loss(np.zeros((2, 2))).value == 2.0
    assert occlusion_loss(np.zeros((3, 2))).value == 6.0


def test_occlusion_log2_distance_closed_form():
    x = np.array([[0.0, 0.0], [np.log(2.0), 0.0]])
    ev = occlusion_loss(x)
    assert abs(ev.value - 1.0) < 1e-12


def test_occlusion_single_node_zero():
    ev = occlusion_loss(np.zeros((1, 2)))
    assert ev.value == 0.0


# ---------------------------------------------------------------- invariances


def rotate(x, theta):
    c, s = np.cos(theta), np.sin(theta)
    return x @ np.array([[c, s], [-s, c]])


def test_rigid_motion_invariance_all_losses():
    g = generate_synthetic("random_connected", 9, seed=4)
    d = shortest_paths(g).astype(float)
    a = tsne_affinities(d)
    rng = np.random.default_rng(13)
    x = rng.normal(size=(9, 2))
    moved = rotate(x, 0.83) + np.array([2.5, -1.25])
    evaluators = {
        "stress": lambda p: stress_loss(p, d).value,
        "tsne": lambda p: tsne_loss(p, a).value,
        "angle": lambda p: angle_loss(p, g).value,
        "edge_var": lambda p: edge_var_loss(p, g).value,
        "occlusion": lambda p: occlusion_loss(p).value,
    }
    for name, fn in evaluators.items():
        assert abs(fn(x) - fn(moved)) < 1e-9, name


def test_stress_and_edge_var_are_not_scale_invariant():
    g = generate_synthetic("random_connected", 9, seed=4)
    d = shortest_paths(g).astype(float)
    x = np.random.default_rng(13).normal(size=(9, 2))
    assert abs(stress_loss(x, d).value - stress_loss(1.7 * x, d).value) > 1e-6
    assert abs(edge_var_loss(x, g).value - edge_var_loss(1.7 * x, g).value) > 1e-6


# ---------------------------------------------------------------- gradient suite


def angle_near_kink(x, g, margin):
    """True when some node's gap structure sits within `margin` of a kink."""
    for v in range(g.n):
        nbrs = np.array(g.neighbors[v])
        if nbrs.size <= 1:
            continue
        delta = x[nbrs] - x[v]
        psi = np.sort(np.arctan2(delta[:, 1], delta[:, 0]))
        gaps = np.append(np.diff(psi), 2 * np.pi - (psi[-1] - psi[0]))
        target = 2 * np.pi / nbrs.size
        if np.any(gaps < margin) or np.any(np.abs(gaps - target) < margin):
            return True
    return False


def test_gradient_suite_all_losses():
    rng = np.random.default_rng(21)
    checked = {"stress": 0, "tsne": 0, "angle": 0, "edge_var": 0, "occlusion": 0}
    for _ in range(50):
        g = random_connected(rng)
        d = shortest_paths(g).astype(float)
        a = tsne_affinities(d)
        x = rng.normal(size=(g.n, 2)) * 2.0
        cases = {
            "stress": (lambda p: stress_loss(p, d), 1e-5),
            "tsne": (lambda p: tsne_loss(p, a), 1e-5),
            "angle": (lambda p: angle_loss(p, g), 1e-7),
            "edge_var": (lambda p: edge_var_loss(p, g), 1e-5),
            "occlusion": (lambda p: occlusion_loss(p), 1e-5),
        }
        for name, (fn, h) in cases.items():
            if name == "angle" and angle_near_kink(x, g, margin=1e-6):
                continue
            ev = fn(x)
            fd = finite_difference_gradient(lambda p: fn(p).value, x, h=h)
            assert rel_err(ev.grad, fd) < 1e-4, f"{name} on n={g.n}"
            checked[name] += 1
    assert all(c >= 40 for c in checked.values()), checked


# ---------------------------------------------------------------- plumbing


def test_fd_helper_constant_and_linear():
    x = np.random.default_rng(0).normal(size=(4, 2))
    assert np.all(finite_difference_gradient(lambda p: 3.0, x, h=1e-5) == 0.0)
    fd = finite_difference_gradient(lambda p: float(p[:, 0].sum()), x, h=1e-5)
    assert np.allclose(fd[:, 0], 1.0, atol=1e-9)
    assert np.allclose(fd[:, 1], 0.0, atol=1e-9)


def test_fd_helper_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda p: 0.0, np.zeros((2, 2)), h=0.0)


def test_perturb_gives_up_after_three_attempts():
    with pytest.raises(errors.CoincidentNodes):
        _perturb_until_separated(np.zeros((2, 2)), lambda p: True)


def test_loss_evaluation_is_frozen():
    ev = LossEvaluation(1.0, np.zeros((1, 2)))
    with pytest.raises(AttributeError):
        ev.value = 2.0
