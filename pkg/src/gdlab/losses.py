"""Differentiable aesthetic criteria over 2D layouts.

Five criteria (pairwise stress, neighborhood-preservation KL divergence,
incident-angle uniformity, edge length variation, node occlusion), each
returning the scalar value together with its exact analytic gradient with
respect to every node position. A central finite-difference helper serves as
the independent verification oracle for all of them.

Conventions fixed here (and relied on by tests):
- stress sums over unordered pairs, occlusion over ordered pairs;
- norms and absolute values use subgradient 0 at their kinks;
- layouts with coincident nodes are retried after a deterministic 1e-9
  perturbation (3 attempts) before CoincidentNodes is raised, for the two
  criteria whose gradients need a direction between exact duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from ._rng import stream
from .graphs import Graph
from .validation import check_distance_matrix, check_layout

CRITERIA = ("stress", "tsne", "angle", "edge_var", "occlusion")


@dataclass(frozen=True)
class LossEvaluation:
    """Scalar criterion value plus d(value)/d(position) for every node."""

    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class TsneAffinities:
    """Symmetrized graph-space affinities with their calibrated bandwidths."""

    p: np.ndarray
    sigma: np.ndarray
    perplexity: float


def default_perplexity(n: int) -> float:
    """Perplexity used when the caller does not specify one."""
    return max(1.0, min(30.0, (n - 1) / 3.0))


def _perturb_until_separated(x: np.ndarray, coincident) -> np.ndarray:
    """Return a layout with no coincident pair per `coincident(x)`.

    Applies up to 3 deterministic pseudo-random nudges of magnitude ~1e-9;
    raises CoincidentNodes if duplicates persist.
    """
    if not coincident(x):
        return x
    out = x.copy()
    for attempt in range(3):
        rng = stream(attempt, "loss-perturb")
        out = out + 1e-9 * rng.standard_normal(out.shape)
        if not coincident(out):
            return out
    raise errors.CoincidentNodes("coincident nodes persist after 3 perturbations")


def _pairwise(x: np.ndarray):
    """diff[u, v] = x_u - x_v and its norms (diagonal left at zero)."""
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt((diff**2).sum(axis=2))
    return diff, r


def stress_loss(x, d) -> LossEvaluation:
    """Weighted squared mismatch between layout and graph distances.

    Sum over unordered pairs u < v of (1/d_uv^2)(||x_u - x_v|| - d_uv)^2.
    """
    x = check_layout(x)
    d = check_distance_matrix(d, x.shape[0])
    n = x.shape[0]
    if n == 1:
        return LossEvaluation(0.0, np.zeros((1, 2)))

    def has_dupes(pts):
        _, r = _pairwise(pts)
        return bool(np.any(r[np.triu_indices(n, k=1)] == 0.0))

    x = _perturb_until_separated(x, has_dupes)
    diff, r = _pairwise(x)
    off = ~np.eye(n, dtype=bool)
    w = np.zeros((n, n))
    w[off] = 1.0 / d[off] ** 2
    rs = np.where(off, r, 1.0)
    value = 0.5 * float(np.sum(w * (r - d) ** 2))  # ordered sum halved = unordered
    coef = np.where(off, 2.0 * w * (r - d) / rs, 0.0)
    grad = (coef[:, :, None] * diff).sum(axis=1)
    return LossEvaluation(value, grad)


def tsne_affinities(d, perplexity: float | None = None) -> TsneAffinities:
    """Perplexity-calibrated Gaussian affinities over hop distances.

    Per-node bandwidths are found by binary search so the conditional
    distribution's perplexity matches the target (within 1e-5 where the
    target is attainable; a node whose entropy range excludes the target,
    e.g. ties at the minimum distance force perplexity >= the tie count,
    keeps the search's boundary bandwidth). The symmetrized matrix sums
    to 1 over ordered pairs.
    """
    d = check_distance_matrix(d)
    n = d.shape[0]
    if n < 2:
        raise errors.PerplexityOutOfRange("affinities need at least 2 nodes")
    if perplexity is None:
        perplexity = default_perplexity(n)
    if not 1.0 <= perplexity <= n - 1:
        raise errors.PerplexityOutOfRange(f"perplexity={perplexity} outside [1, {n - 1}]")
    target = float(np.log(perplexity))

    cond = np.zeros((n, n))
    sigma = np.zeros(n)
    for i in range(n):
        d2 = np.delete(d[i], i) ** 2

        d2_min = d2.min()

        def entropy_and_probs(beta):
            logits = -beta * d2
            e = np.exp(logits - logits.max())
            s = e.sum()
            p = e / s
            # H = log(sum exp) + max_logit + beta * E[d^2], in nats; the last
            # two terms are combined analytically (max logit = -beta*min d^2)
            # so huge beta cannot cancel catastrophically
            return float(np.log(s) + beta * float(p @ (d2 - d2_min))), p

        beta, lo, hi = 1.0, 0.0, np.inf
        h, p = entropy_and_probs(beta)
        for _ in range(100):
            if abs(h - target) < 1e-5 / max(perplexity, 1.0):
                break
            if h > target:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if np.isinf(hi) else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else 0.5 * (lo + hi)
            h, p = entropy_and_probs(beta)
        sigma[i] = np.sqrt(0.5 / beta)
        cond[i, np.arange(n) != i] = p

    p_sym = (cond + cond.T) / (2.0 * n)
    return TsneAffinities(p=p_sym, sigma=sigma, perplexity=float(perplexity))


def tsne_loss(x, affinities: TsneAffinities) -> LossEvaluation:
    """KL divergence from layout-space Student-t similarities to `affinities`.

    q_ij is the normalized (1 + ||x_i - x_j||^2)^-1 kernel over ordered
    pairs; the 0 * log(0/q) convention makes vanished affinities inert.
    """
    x = check_layout(x)
    p = affinities.p
    n = x.shape[0]
    if p.shape != (n, n):
        raise errors.DimensionMismatch(f"affinity matrix {p.shape} for layout with n={n}")
    diff, r = _pairwise(x)
    off = ~np.eye(n, dtype=bool)
    u = np.where(off, 1.0 / (1.0 + r**2), 0.0)
    z = float(u.sum())
    q = u / z
    mask = (p > 0.0) & off
    value = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    coef = 4.0 * (p - q) * u
    grad = (coef[:, :, None] * diff).sum(axis=1)
    return LossEvaluation(value, grad)


def angle_loss(x, g: Graph) -> LossEvaluation:
    """Deviation of incident-edge angular gaps from the uniform fan.

    At each node the incident edges are sorted by polar angle; the deg(v)
    consecutive gaps (wrap included) sum to 2*pi, and the loss adds
    |2*pi/deg(v) - gap| for each. Sign(0) = 0 acts as the subgradient at
    exact uniformity and at sorting ties.
    """
    x = check_layout(x, g.n)
    if g.n == 1 or not g.edges:
        return LossEvaluation(0.0, np.zeros((g.n, 2)))
    eu = np.array([e[0] for e in g.edges])
    ev = np.array([e[1] for e in g.edges])

    def has_zero_edge(pts):
        return bool(np.any(np.linalg.norm(pts[eu] - pts[ev], axis=1) == 0.0))

    x = _perturb_until_separated(x, has_zero_edge)
    value = 0.0
    grad = np.zeros((g.n, 2))
    two_pi = 2.0 * np.pi
    for v in range(g.n):
        nbrs = np.array(g.neighbors[v])
        k = nbrs.size
        if k <= 1:
            continue  # single gap of 2*pi matches its target exactly
        delta = x[nbrs] - x[v]
        psi = np.arctan2(delta[:, 1], delta[:, 0])
        order = np.argsort(psi, kind="stable")
        psi_s = psi[order]
        gaps = np.empty(k)
        gaps[: k - 1] = np.diff(psi_s)
        gaps[k - 1] = two_pi - (psi_s[-1] - psi_s[0])
        target = two_pi / k
        value += float(np.abs(target - gaps).sum())
        s = np.sign(target - gaps)
        # dL/dgap_i = -s_i; gap_i = psi_s[i+1] - psi_s[i] (last wraps)
        dpsi = np.zeros(k)
        dpsi[1:] -= s[: k - 1]
        dpsi[: k - 1] += s[: k - 1]
        dpsi[-1] += s[k - 1]
        dpsi[0] -= s[k - 1]
        r2 = (delta**2).sum(axis=1)
        dangle = np.column_stack([-delta[:, 1], delta[:, 0]]) / r2[:, None]
        contrib = dpsi[:, None] * dangle[order]
        np.add.at(grad, nbrs[order], contrib)
        grad[v] -= contrib.sum(axis=0)
    return LossEvaluation(value, grad)


def edge_var_loss(x, g: Graph, normalize_mean: bool = False) -> LossEvaluation:
    """Mean squared deviation of edge lengths from the unit target.

    The default fixes the target length at 1. With normalize_mean=True the
    target is the current mean length and the result is scaled by its
    square (the non-default reading of the criterion).
    """
    x = check_layout(x, g.n)
    if not g.edges:
        raise errors.DimensionMismatch("edge length variation needs at least one edge")
    eu = np.array([e[0] for e in g.edges])
    ev = np.array([e[1] for e in g.edges])
    delta = x[eu] - x[ev]
    lengths = np.linalg.norm(delta, axis=1)
    m = lengths.size
    safe = np.where(lengths > 0.0, lengths, 1.0)
    unit = np.where(lengths[:, None] > 0.0, delta / safe[:, None], 0.0)
    grad = np.zeros((g.n, 2))
    if not normalize_mean:
        value = float(np.mean((lengths - 1.0) ** 2))
        dl = 2.0 * (lengths - 1.0) / m
    else:
        lbar = float(lengths.mean())
        if lbar == 0.0:
            raise errors.CoincidentNodes("all edges have zero length")
        v0 = float(np.mean((lengths - lbar) ** 2))
        value = v0 / lbar**2
        # d(mean sq dev)/dl_e = (2/m)(l_e - lbar); the lbar term cancels
        dl = (2.0 / m) * (lengths - lbar) / lbar**2 - (2.0 * v0 / lbar**3) / m
    np.add.at(grad, eu, dl[:, None] * unit)
    np.add.at(grad, ev, -dl[:, None] * unit)
    return LossEvaluation(value, grad)


def occlusion_loss(x) -> LossEvaluation:
    """Exponential proximity penalty over ordered node pairs."""
    x = check_layout(x)
    n = x.shape[0]
    if n == 1:
        return LossEvaluation(0.0, np.zeros((1, 2)))
    diff, r = _pairwise(x)
    off = ~np.eye(n, dtype=bool)
    e = np.where(off, np.exp(-r), 0.0)
    value = float(e.sum())
    rs = np.where(r > 0.0, r, 1.0)
    coef = np.where(off & (r > 0.0), -2.0 * e / rs, 0.0)
    grad = (coef[:, :, None] * diff).sum(axis=1)
    return LossEvaluation(value, grad)


def finite_difference_gradient(loss_fn, x, h: float) -> np.ndarray:
    """Central-difference gradient of `loss_fn` (layout -> float)."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = check_layout(x)
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        for j in range(2):
            xp = x.copy()
            xm = x.copy()
            xp[i, j] += h
            xm[i, j] -= h
            grad[i, j] = (loss_fn(xp) - loss_fn(xm)) / (2.0 * h)
    return grad
