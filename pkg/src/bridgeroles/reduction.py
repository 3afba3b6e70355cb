"""2D projection of latent embeddings.

Two reducers over the n x d embedding matrix:

* ``pca2``: mean-centered projection onto the top two principal axes,
  with a deterministic sign convention so repeated runs agree bit for bit.
* ``umap2``: a self-contained UMAP-style layout. Exact k-NN graph,
  per-point smooth-kNN calibration, fuzzy union symmetrization, then a
  sequential SGD layout with negative sampling. Sequential on purpose:
  the layout is bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
import random

import numpy as np
from scipy import sparse
from scipy.optimize import curve_fit

__all__ = [
    "ReductionError",
    "DegenerateData",
    "TooFewPoints",
    "pca2",
    "umap2",
    "find_ab_params",
]

# Smooth-kNN calibration constants.
SMOOTH_TOLERANCE = 1e-5
MIN_SCALE = 1e-3
BISECTION_ITERS = 64

# Layout constants.
GRAD_CLIP = 4.0
REPULSION_STRENGTH = 1.0
NEGATIVE_SAMPLE_RATE = 5.0
INIT_RANGE = 10.0


class ReductionError(ValueError):
    """Base error for the 2D reducers."""


class DegenerateData(ReductionError):
    """The input carries no variance to project."""


class TooFewPoints(ReductionError):
    """Not enough rows for the requested reduction."""


def _as_matrix(embeddings) -> np.ndarray:
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2:
        raise ReductionError("embeddings must be a 2D array, got shape %r" % (X.shape,))
    if X.shape[1] < 2:
        raise ReductionError("embeddings need at least 2 columns, got %d" % X.shape[1])
    if not np.all(np.isfinite(X)):
        raise ReductionError("embeddings contain non-finite values")
    return X


# ---------------------------------------------------------------------------
# PCA


def _principal_axes(centered: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 eigenvectors of the covariance, sign-fixed, plus variance fractions."""
    n = centered.shape[0]
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    # eigh returns ascending order; negatives are round-off noise
    eigvals = np.clip(eigvals[::-1], 0.0, None)
    eigvecs = eigvecs[:, ::-1]
    total = float(eigvals.sum())
    if total <= 0.0:
        raise DegenerateData("embedding matrix has zero variance")
    axes = eigvecs[:, :2].copy()
    for j in range(2):
        peak = int(np.argmax(np.abs(axes[:, j])))
        if axes[peak, j] < 0:
            axes[:, j] = -axes[:, j]
    fractions = eigvals[:2] / total
    return axes, fractions


def pca2(embeddings) -> tuple[np.ndarray, np.ndarray]:
    """Project rows onto the top two principal axes.

    Returns ``(coords, fractions)`` where ``coords`` is n x 2 and
    ``fractions`` holds the explained-variance share of each axis.
    The sign of each axis is fixed so its largest-magnitude loading is
    positive.

    Raises ``TooFewPoints`` for n < 2 and ``DegenerateData`` when every
    row is identical.
    """
    X = _as_matrix(embeddings)
    if X.shape[0] < 2:
        raise TooFewPoints("pca2 needs at least 2 points, got %d" % X.shape[0])
    centered = X - X.mean(axis=0)
    axes, fractions = _principal_axes(centered)
    return centered @ axes, fractions


# ---------------------------------------------------------------------------
# UMAP: curve parameters


def find_ab_params(min_dist: float = 0.1, spread: float = 1.0) -> tuple[float, float]:
    """Fit the rational curve 1/(1 + a*x^(2b)) to the offset exponential.

    The target is 1 below ``min_dist`` and exp(-(x - min_dist)/spread)
    beyond it, sampled on [0, 3*spread]. Least squares via curve_fit.
    """
    if not (min_dist > 0.0 and spread > 0.0):
        raise ReductionError("min_dist and spread must be positive")

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


# ---------------------------------------------------------------------------
# UMAP: fuzzy graph


def _exact_knn(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the k nearest rows (self included, column 0)."""
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.clip(d2, 0.0, None, out=d2)
    dists = np.sqrt(d2)
    np.fill_diagonal(dists, 0.0)
    # stable sort so distance ties resolve to the lower point index
    order = np.argsort(dists, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(dists, order, axis=1)


def _smooth_knn(knn_dists: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma) so the neighbor weights sum to log2(k)."""
    n, k = knn_dists.shape
    target = math.log2(k)
    rho = np.zeros(n)
    sigma = np.zeros(n)
    grand_mean = float(knn_dists.mean())
    for i in range(n):
        row = knn_dists[i]
        positive = row[row > 0.0]
        if positive.size > 0:
            rho[i] = float(positive[0])
        lo, hi, mid = 0.0, math.inf, 1.0
        for _ in range(BISECTION_ITERS):
            psum = 0.0
            for j in range(1, k):
                d = row[j] - rho[i]
                psum += math.exp(-d / mid) if d > 0.0 else 1.0
            if abs(psum - target) < SMOOTH_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == math.inf else (lo + hi) / 2.0
        sigma[i] = mid
        # keep sigma from collapsing on near-duplicate neighborhoods
        floor = MIN_SCALE * (float(row.mean()) if rho[i] > 0.0 else grand_mean)
        if sigma[i] < floor:
            sigma[i] = floor
    return rho, sigma


def _membership_graph(order: np.ndarray, knn_dists: np.ndarray,
                      rho: np.ndarray, sigma: np.ndarray) -> sparse.csr_matrix:
    n, k = order.shape
    rows, cols, vals = [], [], []
    for i in range(n):
        for j in range(k):
            target = int(order[i, j])
            if target == i:
                continue
            d = knn_dists[i, j] - rho[i]
            if d <= 0.0 or sigma[i] <= 0.0:
                val = 1.0
            else:
                val = math.exp(-d / sigma[i])
            rows.append(i)
            cols.append(target)
            vals.append(val)
    P = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    # fuzzy union: a + b - ab
    return P + P.T - P.multiply(P.T)


# ---------------------------------------------------------------------------
# UMAP: layout


def _optimize_layout(pos: list, head: list, tail: list, eps_sample: list,
                     a: float, b: float, n_epochs: int, n_vertices: int,
                     seed: int) -> None:
    """Sequential SGD over the fuzzy graph edges.

    ``pos`` is a flat [x0, y0, x1, y1, ...] list mutated in place. Strong
    edges are sampled every epoch, weak ones proportionally less often via
    the per-edge epoch schedule. Each positive sample moves both endpoints
    together; negative samples push the head away from random vertices.
    """
    rand = random.Random(seed)
    randrange = rand.randrange
    n_edges = len(head)
    eps_neg = [e / NEGATIVE_SAMPLE_RATE for e in eps_sample]
    next_sample = list(eps_sample)
    next_neg = list(eps_neg)
    bm1 = b - 1.0
    gamma2b = 2.0 * REPULSION_STRENGTH * b
    clip = GRAD_CLIP
    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        for i in range(n_edges):
            if next_sample[i] > epoch:
                continue
            j2 = 2 * head[i]
            jx = pos[j2]
            jy = pos[j2 + 1]
            k2 = 2 * tail[i]
            kx = pos[k2]
            ky = pos[k2 + 1]
            dx = jx - kx
            dy = jy - ky
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** bm1) / (a * d2 ** b + 1.0)
                gx = coeff * dx
                gy = coeff * dy
                if gx > clip:
                    gx = clip
                elif gx < -clip:
                    gx = -clip
                if gy > clip:
                    gy = clip
                elif gy < -clip:
                    gy = -clip
                gx *= alpha
                gy *= alpha
                jx += gx
                jy += gy
                pos[j2] = jx
                pos[j2 + 1] = jy
                pos[k2] = kx - gx
                pos[k2 + 1] = ky - gy
            next_sample[i] += eps_sample[i]
            n_neg = int((epoch - next_neg[i]) / eps_neg[i])
            for _ in range(n_neg):
                t = randrange(n_vertices)
                if t == head[i]:
                    continue
                t2 = 2 * t
                dx = jx - pos[t2]
                dy = jy - pos[t2 + 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = gamma2b / ((0.001 + d2) * (a * d2 ** b + 1.0))
                    gx = coeff * dx
                    gy = coeff * dy
                    if gx > clip:
                        gx = clip
                    elif gx < -clip:
                        gx = -clip
                    if gy > clip:
                        gy = clip
                    elif gy < -clip:
                        gy = -clip
                else:
                    gx = clip
                    gy = clip
                jx += gx * alpha
                jy += gy * alpha
            if n_neg > 0:
                pos[j2] = jx
                pos[j2 + 1] = jy
            next_neg[i] += n_neg * eps_neg[i]


def umap2(embeddings, n_neighbors: int = 15, min_dist: float = 0.1,
          seed: int = 0, n_epochs: int = 500) -> np.ndarray:
    """Lay out the embedding rows in 2D, preserving local neighborhoods.

    Pipeline: exact Euclidean k-NN (k = ``n_neighbors``), smooth-kNN
    membership calibration, fuzzy union, then ``n_epochs`` of sequential
    SGD with negative sampling from a seeded uniform [-10, 10] start.
    Deterministic per seed.
    """
    X = _as_matrix(embeddings)
    n = X.shape[0]
    if not (isinstance(n_neighbors, int) and n_neighbors >= 2):
        raise ReductionError("n_neighbors must be an integer >= 2")
    if n <= n_neighbors:
        raise TooFewPoints(
            "umap2 needs more points than n_neighbors (%d <= %d)" % (n, n_neighbors))
    if not (isinstance(n_epochs, int) and n_epochs >= 1):
        raise ReductionError("n_epochs must be a positive integer")

    order, knn_dists = _exact_knn(X, n_neighbors)
    rho, sigma = _smooth_knn(knn_dists)
    graph = _membership_graph(order, knn_dists, rho, sigma).tocsr()
    graph.sum_duplicates()

    # edges sampled less often than once per run contribute nothing
    w_max = float(graph.data.max())
    graph.data[graph.data < w_max / n_epochs] = 0.0
    graph.eliminate_zeros()
    coo = graph.tocoo()
    head = coo.row.tolist()
    tail = coo.col.tolist()
    eps_sample = (w_max / coo.data).tolist()

    init = np.random.default_rng(seed).uniform(-INIT_RANGE, INIT_RANGE, size=(n, 2))
    pos = init.ravel().tolist()
    _optimize_layout(pos, head, tail, eps_sample, *find_ab_params(min_dist),
                     n_epochs, n, seed)
    out = np.asarray(pos, dtype=np.float64).reshape(n, 2)
    if not np.all(np.isfinite(out)):
        raise ReductionError("layout diverged to non-finite coordinates")
    return out
