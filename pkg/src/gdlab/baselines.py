"""Layout initialization and the classical stress-majorization solver.

Two initializers (uniform random and PivotMDS) plus the majorization solver
that serves as the classical comparison baseline for the neural model. Both
solver-style classes follow the sklearn estimator protocol: constructor
parameters are stored verbatim, fitted results land in trailing-underscore
attributes, and ``get_params``/``set_params`` come from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import errors
from ._rng import stream
from .validation import check_distance_matrix, check_layout


def random_init(n: int, seed: int) -> np.ndarray:
    """Uniform layout on [0, 1]^2, deterministic per seed."""
    if n < 1:
        raise errors.InvalidSize(f"node count must be >= 1, got {n}")
    return stream(seed, "init").random((n, 2))


def _pair_stress(x: np.ndarray, d: np.ndarray) -> float:
    """Stress over unordered pairs with weights 1/d^2."""
    n = x.shape[0]
    if n < 2:
        return 0.0
    iu, ju = np.triu_indices(n, k=1)
    r = np.linalg.norm(x[iu] - x[ju], axis=1)
    dd = d[iu, ju]
    return float(np.sum((r - dd) ** 2 / dd**2))


def _power_iteration(m, ortho, rng, tol, max_iter):
    """Dominant eigenvector of symmetric PSD `m`, kept orthogonal to `ortho`.

    Returns (eigenvalue, unit vector). A (near-)zero operator yields
    eigenvalue 0 and whatever orthonormal start vector was drawn.
    """
    k = m.shape[0]

    def deflate(w):
        # applied twice: a single pass leaves an eps-level residual that the
        # dominant eigenvalue regrows past the deflated spectrum
        for _ in range(2):
            for u in ortho:
                w -= (u @ w) * u
        return w

    v = deflate(rng.standard_normal(k))
    nv = np.linalg.norm(v)
    if nv == 0.0:
        v = np.zeros(k)
        v[0] = 1.0
    else:
        v /= nv
    lam = 0.0
    for _ in range(max_iter):
        y = deflate(m @ v)
        ny = np.linalg.norm(y)
        if ny <= 1e-300:
            return 0.0, v
        y /= ny
        if y @ v < 0:
            y = -y
        lam = float(y @ (m @ y))
        if np.linalg.norm(y - v) < tol:
            return lam, y
        v = y
    return lam, v


class PivotMDS(BaseEstimator):
    """Sparse multidimensional scaling on a column sample of pivot nodes.

    Double-centers the n x k matrix of squared hop distances to k pivots and
    projects it onto its two dominant right singular directions, recovering
    the two dominant left singular directions as 2D coordinates at classical
    MDS scale (column norm sqrt of the estimated full-matrix eigenvalue).
    Pivots are chosen by max-min farthest-point sampling from a seeded
    random start.

    Parameters
    ----------
    n_pivots : int or None
        Number of pivot columns; None means min(n, 50).
    random_state : int
        Seed for pivot choice and power-iteration start vectors.
    power_tol, power_max_iter :
        Power-iteration stopping controls.
    """

    def __init__(self, n_pivots=None, random_state=0, power_tol=1e-9, power_max_iter=1000):
        self.n_pivots = n_pivots
        self.random_state = random_state
        self.power_tol = power_tol
        self.power_max_iter = power_max_iter

    def fit(self, d, y=None):
        d = check_distance_matrix(d)
        n = d.shape[0]
        if n == 1:
            self.pivots_ = np.array([0], dtype=np.int64)
            self.embedding_ = np.zeros((1, 2))
            return self
        k = min(n, 50) if self.n_pivots is None else int(self.n_pivots)
        if not 1 <= k <= n:
            raise errors.PivotCountOutOfRange(f"num_pivots={k} outside [1, {n}]")
        rng = stream(self.random_state, "pivots")

        pivots = [int(rng.integers(0, n))]
        min_dist = d[:, pivots[0]].copy()
        while len(pivots) < k:
            nxt = int(np.argmax(min_dist))
            pivots.append(nxt)
            min_dist = np.minimum(min_dist, d[:, nxt])
        pivots = np.array(pivots, dtype=np.int64)

        delta = d[:, pivots] ** 2
        c = -0.5 * (
            delta
            - delta.mean(axis=0, keepdims=True)
            - delta.mean(axis=1, keepdims=True)
            + delta.mean()
        )

        m = c.T @ c
        lam1, v1 = _power_iteration(m, [], rng, self.power_tol, self.power_max_iter)
        if k > 1:
            lam2, v2 = _power_iteration(m, [v1], rng, self.power_tol, self.power_max_iter)
        else:
            v2 = np.zeros(1)

        # Projecting onto a unit right-singular direction yields sigma times
        # the unit left-singular vector; rescale to the classical MDS column
        # norm sqrt(lambda), estimating the full-matrix eigenvalue as
        # lambda = sigma * sqrt(n / k) (column sampling shrinks singular
        # values by sqrt(k / n)). Directions whose singular value sits at
        # the noise floor of the squared matrix (sqrt(eps) relative) carry
        # no distance signal and are zeroed, e.g. the second axis of an
        # exactly collinear embedding.
        proj = [c @ v1, c @ v2]
        sigmas = [float(np.linalg.norm(p)) for p in proj]
        floor = max(sigmas) * np.sqrt(np.finfo(float).eps * max(n, k))
        x = np.column_stack(
            [
                p * (np.sqrt(s * np.sqrt(n / k)) / s) if s > floor else np.zeros(n)
                for p, s in zip(proj, sigmas)
            ]
        )
        x -= x.mean(axis=0, keepdims=True)
        self.pivots_ = pivots
        self.embedding_ = x
        return self

    def fit_transform(self, d, y=None):
        return self.fit(d).embedding_


class StressMajorization(BaseEstimator):
    """Iterative per-node majorization solver for the pairwise stress energy.

    Each sweep moves every node to the closed-form minimizer of the local
    quadratic majorant (weighted mean of neighbors displaced along current
    directions by the target distances), so stress is non-increasing sweep
    over sweep. Stops when the relative stress decrease drops below `tol`.

    Parameters
    ----------
    tol : float
        Relative per-sweep stress decrease below which iteration stops.
    max_sweeps : int
        Hard sweep cap.
    random_state : int
        Seeds the fallback random init and the coincident-node perturbation.
    """

    def __init__(self, tol=1e-7, max_sweeps=300, random_state=0):
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.random_state = random_state

    def fit(self, d, y=None, init=None):
        d = check_distance_matrix(d)
        n = d.shape[0]
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if init is None:
            x = random_init(n, self.random_state)
        else:
            x = check_layout(init, n).copy()
        if n == 1:
            self.embedding_ = x
            self.stress_ = 0.0
            self.stress_history_ = [0.0]
            self.n_sweeps_ = 0
            return self

        perturb_rng = stream(self.random_state, "majorization-perturb")
        w = np.zeros_like(d)
        off = ~np.eye(n, dtype=bool)
        w[off] = 1.0 / d[off] ** 2
        w_sums = w.sum(axis=1)

        stress = _pair_stress(x, d)
        history = [stress]
        sweeps = 0
        for _ in range(int(self.max_sweeps)):
            self._separate(x, perturb_rng)
            for u in range(n):
                diff = x[u] - x
                r = np.linalg.norm(diff, axis=1)
                r[r == 0.0] = 1.0  # diagonal is zero-weighted; mid-sweep hits get direction 0
                contrib = w[u, :, None] * (x + d[u, :, None] * diff / r[:, None])
                x[u] = contrib.sum(axis=0) / w_sums[u]
            sweeps += 1
            new_stress = _pair_stress(x, d)
            history.append(new_stress)
            done = new_stress == 0.0 or (stress - new_stress) < self.tol * max(stress, 1e-300)
            stress = new_stress
            if done:
                break
        self.embedding_ = x
        self.stress_ = stress
        self.stress_history_ = history
        self.n_sweeps_ = sweeps
        return self

    def fit_transform(self, d, y=None, init=None):
        return self.fit(d, init=init).embedding_

    @staticmethod
    def _separate(x, rng):
        """Nudge coincident nodes apart with deterministic 1e-9 offsets."""
        n = x.shape[0]
        for _ in range(3):
            iu, ju = np.triu_indices(n, k=1)
            r = np.linalg.norm(x[iu] - x[ju], axis=1)
            hits = np.flatnonzero(r == 0.0)
            if hits.size == 0:
                return
            for h in hits:
                offset = rng.standard_normal(2)
                x[ju[h]] += 1e-9 * offset / max(np.linalg.norm(offset), 1e-12)
        iu, ju = np.triu_indices(n, k=1)
        if np.any(np.linalg.norm(x[iu] - x[ju], axis=1) == 0.0):
            raise errors.CoincidentNodes("coincident nodes persist after 3 perturbations")
