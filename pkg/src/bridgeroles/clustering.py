"""Cluster extraction over 2D layouts.

Density-based clustering first (a self-contained HDBSCAN: mutual
reachability, MST, condensed tree, excess-of-mass selection), with
K-Means as the fallback when the density pass degenerates to noise or
a single cluster. Includes the silhouette score used for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NOISE",
    "ClusteringError",
    "KTooLarge",
    "SilhouetteUndefined",
    "ClusterAssignment",
    "min_cluster_size_rule",
    "fallback_k",
    "hdbscan",
    "kmeans",
    "cluster_with_fallback",
    "silhouette",
]

NOISE = -1

METHODS = ("hdbscan", "kmeans_fallback", "kmeans_adaptive")

MAX_LLOYD_ITERS = 300

# cap used when a merge distance is zero and lambda would be infinite
MAX_LAMBDA = 1e12


class ClusteringError(ValueError):
    """Base error for clustering operations."""


class KTooLarge(ClusteringError):
    """Requested more K-Means clusters than there are points."""


class SilhouetteUndefined(ClusteringError):
    """Silhouette needs at least two non-noise clusters."""


@dataclass(eq=False)
class ClusterAssignment:
    """Per-point labels plus the bookkeeping the reports need."""

    labels: np.ndarray
    method: str
    silhouette: float | None
    n_clusters: int
    noise_count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ClusteringError("labels must be one-dimensional")
        if self.method not in METHODS:
            raise ClusteringError("unknown clustering method %r" % (self.method,))
        real = set(int(v) for v in self.labels) - {NOISE}
        if len(real) != self.n_clusters:
            raise ClusteringError("n_clusters does not match the labels")
        if int(np.sum(self.labels == NOISE)) != self.noise_count:
            raise ClusteringError("noise_count does not match the labels")
        if self.silhouette is not None and not -1.0 <= self.silhouette <= 1.0:
            raise ClusteringError("silhouette outside [-1, 1]")


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ClusteringError("points must be a 2D array, got shape %r" % (pts.shape,))
    if not np.all(np.isfinite(pts)):
        raise ClusteringError("points contain non-finite values")
    return pts


def _pairwise(pts: np.ndarray) -> np.ndarray:
    diffs = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diffs ** 2).sum(axis=2))


def min_cluster_size_rule(n: int) -> int:
    """Minimum cluster size scaled to the city: max(5, 3% of n)."""
    return max(5, int(n * 0.03))


def fallback_k(n: int) -> int:
    """K for the K-Means fallback: 2 for small cities, floor(sqrt(n)/2) above 150."""
    if n < 150:
        return 2
    return int(math.sqrt(n) / 2.0)


def _assignment(labels: np.ndarray, method: str, points: np.ndarray) -> ClusterAssignment:
    real = set(int(v) for v in labels) - {NOISE}
    try:
        score = silhouette(points, labels)
    except SilhouetteUndefined:
        score = None
    return ClusterAssignment(
        labels=labels,
        method=method,
        silhouette=score,
        n_clusters=len(real),
        noise_count=int(np.sum(labels == NOISE)),
    )


# ---------------------------------------------------------------------------
# HDBSCAN


def _prim_mst(weights: np.ndarray) -> list[tuple[float, int, int]]:
    """Minimum spanning tree of a dense symmetric weight matrix."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = weights[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        nxt = int(np.argmin(best))
        i, j = int(best_from[nxt]), nxt
        edges.append((float(best[nxt]), min(i, j), max(i, j)))
        in_tree[nxt] = True
        best[nxt] = np.inf
        row = weights[nxt]
        better = (row < best) & ~in_tree
        best[better] = row[better]
        best_from[better] = nxt
    return edges


class _CondNode:
    """One cluster of the condensed tree."""

    __slots__ = ("birth", "points", "kids", "members", "chosen_stability", "selection")

    def __init__(self, birth: float):
        self.birth = birth
        self.points: list[tuple[int, float]] = []
        self.kids: list[_CondNode] = []
        self.members: list[int] = []


def _single_linkage(mst_edges, n):
    """Merge tree over sorted MST edges; returns (children, dist, size, root)."""
    total = 2 * n - 1
    parent = list(range(total))
    children = [None] * total
    dist = [0.0] * total
    size = [1] * n + [0] * (n - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    nxt = n
    for w, i, j in sorted(mst_edges):
        ri, rj = find(i), find(j)
        children[nxt] = (ri, rj)
        dist[nxt] = w
        size[nxt] = size[ri] + size[rj]
        parent[ri] = parent[rj] = nxt
        nxt += 1
    return children, dist, size, nxt - 1


def _subtree_leaves(node: int, children, n: int) -> list[int]:
    out, stack = [], [node]
    while stack:
        u = stack.pop()
        if u < n:
            out.append(u)
        else:
            stack.extend(children[u])
    return out


def _condense(children, dist, size, n, min_cluster_size) -> list[_CondNode]:
    """Collapse the merge tree into clusters of at least min_cluster_size.

    Walking top-down, a split where both sides reach the size floor starts
    two child clusters; smaller sides fall out as individual points at the
    split's lambda. Returns nodes in creation order, root first.
    """
    root = 2 * n - 2
    nodes: list[_CondNode] = []
    stack: list[tuple[int, float, _CondNode | None]] = [(root, 0.0, None)]
    while stack:
        sl_node, birth, parent_node = stack.pop()
        c = _CondNode(birth)
        nodes.append(c)
        if parent_node is not None:
            parent_node.kids.append(c)
        cur = sl_node
        while True:
            if cur < n:
                c.points.append((cur, math.inf))
                break
            a, b = children[cur]
            w = dist[cur]
            lam = 1.0 / w if w > 0 else math.inf
            big_a = size[a] >= min_cluster_size
            big_b = size[b] >= min_cluster_size
            if big_a and big_b:
                stack.append((a, lam, c))
                stack.append((b, lam, c))
                break
            if big_a or big_b:
                keep, drop = (a, b) if big_a else (b, a)
                for p in _subtree_leaves(drop, children, n):
                    c.points.append((p, lam))
                cur = keep
            else:
                for p in _subtree_leaves(a, children, n) + _subtree_leaves(b, children, n):
                    c.points.append((p, lam))
                break
    # children sit after their parent in creation order, so a reverse
    # sweep accumulates membership bottom-up
    for c in reversed(nodes):
        c.members = [p for p, _ in c.points]
        for kid in c.kids:
            c.members.extend(kid.members)
    return nodes


def _stability(c: _CondNode) -> float:
    s = sum(min(lam, MAX_LAMBDA) - c.birth for _, lam in c.points)
    for kid in c.kids:
        s += (kid.birth - c.birth) * len(kid.members)
    return s


def _select_excess_of_mass(nodes: list[_CondNode]) -> list[_CondNode]:
    """Bottom-up stability competition; the root itself is never a cluster."""
    for c in reversed(nodes):
        own = _stability(c)
        if not c.kids:
            c.selection = [c]
            c.chosen_stability = own
            continue
        child_total = sum(k.chosen_stability for k in c.kids)
        if own >= child_total:
            c.selection = [c]
            c.chosen_stability = own
        else:
            c.selection = [p for k in c.kids for p in k.selection]
            c.chosen_stability = child_total
    root = nodes[0]
    if not root.kids:
        return []
    return [p for k in root.kids for p in k.selection]


def hdbscan(points, min_cluster_size: int, min_samples: int | None = None) -> ClusterAssignment:
    """Density clustering; points left out of every stable cluster are NOISE.

    ``min_samples`` defaults to ``min_cluster_size``. Labels are assigned
    in order of each cluster's smallest point index.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise ClusteringError("hdbscan needs at least 2 points, got %d" % n)
    if not (isinstance(min_cluster_size, int) and min_cluster_size >= 2):
        raise ClusteringError("min_cluster_size must be an integer >= 2")
    if min_samples is not None and not (isinstance(min_samples, int) and min_samples >= 1):
        raise ClusteringError("min_samples must be a positive integer")
    ms = min(min_cluster_size if min_samples is None else min_samples, n)

    d = _pairwise(pts)
    core = np.sort(d, axis=1)[:, ms - 1]
    mreach = np.maximum(d, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mreach, 0.0)

    mst = _prim_mst(mreach)
    children, dist, size, _ = _single_linkage(mst, n)
    nodes = _condense(children, dist, size, n, min_cluster_size)
    chosen = _select_excess_of_mass(nodes)

    labels = np.full(n, NOISE, dtype=np.int64)
    for idx, c in enumerate(sorted(chosen, key=lambda c: min(c.members))):
        labels[c.members] = idx
    return _assignment(labels, "hdbscan", pts)


# ---------------------------------------------------------------------------
# K-Means


def _plus_plus_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[int(rng.integers(n))]
    min_d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(min_d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=min_d2 / total))
        centers[c] = pts[idx]
        min_d2 = np.minimum(min_d2, ((pts - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(pts: np.ndarray, centers: np.ndarray,
           max_iters: int = MAX_LLOYD_ITERS) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations to an assignment fixpoint; empty clusters reseed
    to the point farthest from its nearest center. Returns (labels,
    centers, inertia history)."""
    n, k = pts.shape[0], centers.shape[0]
    centers = centers.copy()
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        nearest = d2[np.arange(n), labels]
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = pts[mask].mean(axis=0)
            else:
                far = int(np.argmax(nearest))
                centers[c] = pts[far]
                nearest = np.minimum(nearest, ((pts - centers[c]) ** 2).sum(axis=1))
    return labels, centers, history


def kmeans(points, k: int, seed: int = 0, method: str = "kmeans_fallback") -> ClusterAssignment:
    """K-Means with k-means++ seeding; deterministic per seed."""
    pts = _as_points(points)
    n = pts.shape[0]
    if not (isinstance(k, int) and k >= 1):
        raise ClusteringError("k must be a positive integer")
    if k > n:
        raise KTooLarge("k=%d exceeds the %d available points" % (k, n))
    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(pts, k, rng)
    labels, _, _ = _lloyd(pts, centers)
    return _assignment(labels, method, pts)


def cluster_with_fallback(points, n_bridges: int | None = None,
                          seed: int = 0) -> ClusterAssignment:
    """Density clustering with the small-city escape hatch.

    Runs hdbscan at the size rule for n points. When that yields fewer
    than two clusters (the all-noise case included), reruns K-Means:
    K=2 below 150 points, else the adaptive K = floor(sqrt(n)/2).
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n_bridges is not None and n_bridges != n:
        raise ClusteringError("n_bridges=%r does not match %d points" % (n_bridges, n))
    if n == 0:
        return ClusterAssignment(np.empty(0, dtype=np.int64), "kmeans_fallback", None, 0, 0)
    if n == 1:
        return ClusterAssignment(np.zeros(1, dtype=np.int64), "kmeans_fallback", None, 1, 0)
    assignment = hdbscan(pts, min_cluster_size_rule(n))
    if assignment.n_clusters >= 2:
        return assignment
    k = fallback_k(n)
    method = "kmeans_fallback" if n < 150 else "kmeans_adaptive"
    return kmeans(pts, k, seed=seed, method=method)


# ---------------------------------------------------------------------------
# silhouette


def silhouette(points, labels) -> float:
    """Mean silhouette over non-noise points.

    Euclidean distances; points in singleton clusters score 0. Raises
    SilhouetteUndefined with fewer than two non-noise clusters.
    """
    pts = _as_points(points)
    labels = np.asarray(labels)
    if labels.shape != (pts.shape[0],):
        raise ClusteringError("labels must align with points")
    keep = labels != NOISE
    cluster_ids = sorted(set(int(v) for v in labels[keep]))
    if len(cluster_ids) < 2:
        raise SilhouetteUndefined("silhouette needs at least two clusters")
    d = _pairwise(pts)
    member_idx = {c: np.flatnonzero(labels == c) for c in cluster_ids}
    scores = []
    for i in np.flatnonzero(keep):
        own = member_idx[int(labels[i])]
        if own.size == 1:
            scores.append(0.0)
            continue
        a = float(d[i, own].sum()) / (own.size - 1)
        b = min(
            float(d[i, member_idx[c]].mean())
            for c in cluster_ids
            if c != int(labels[i])
        )
        top = max(a, b)
        scores.append((b - a) / top if top > 0 else 0.0)
    return float(sum(scores) / len(scores))
