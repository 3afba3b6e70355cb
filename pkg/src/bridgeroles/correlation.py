"""Spearman rank correlation between latent dimensions and path counts.

Used to ask which embedding dimensions track the highway metapath count.
The p-value is the usual two-sided t approximation; fine for ranking
dimensions, not calibrated for extreme tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "CorrelationError",
    "ConstantInput",
    "CorrelationRow",
    "spearman",
    "latent_correlation_scan",
]


class CorrelationError(ValueError):
    """Base error for correlation analysis."""


class ConstantInput(CorrelationError):
    """Correlation is undefined when either argument never varies."""


@dataclass(frozen=True)
class CorrelationRow:
    """One latent dimension's association with the highway path count."""

    dim: int
    spearman_r: float
    p_value: float

    def __post_init__(self):
        if not 0 <= self.dim:
            raise CorrelationError("dim must be non-negative")
        if not -1.0 <= self.spearman_r <= 1.0:
            raise CorrelationError("spearman_r outside [-1, 1]")
        if not 0.0 <= self.p_value <= 1.0:
            raise CorrelationError("p_value outside [0, 1]")


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise CorrelationError("%s must be one-dimensional" % name)
    if not np.all(np.isfinite(arr)):
        raise CorrelationError("%s contains non-finite values" % name)
    return arr


def spearman(xs, ys) -> tuple[float, float]:
    """Spearman's r with average-rank ties, plus a two-sided p-value.

    p comes from t = r*sqrt((n-2)/(1-r^2)) against Student's t with n-2
    degrees of freedom; |r| = 1 maps to p = 0.
    """
    x = _as_vector(xs, "xs")
    y = _as_vector(ys, "ys")
    if x.shape != y.shape:
        raise CorrelationError("xs and ys must have equal length")
    n = x.size
    if n < 3:
        raise CorrelationError("need at least 3 observations, got %d" % n)
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    rx_c = rx - rx.mean()
    ry_c = ry - ry.mean()
    vx = float(rx_c @ rx_c)
    vy = float(ry_c @ ry_c)
    if vx == 0.0 or vy == 0.0:
        raise ConstantInput("correlation undefined for constant input")
    r = float(rx_c @ ry_c) / math.sqrt(vx * vy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, min(p, 1.0)


def _highway_counts(profiles) -> np.ndarray:
    counts = []
    for p in profiles:
        counts.append(float(p.highway_count) if hasattr(p, "highway_count") else float(p))
    return np.asarray(counts, dtype=np.float64)


def latent_correlation_scan(embeddings, profiles) -> list[CorrelationRow]:
    """Rank every embedding dimension by |spearman r| against highway counts.

    ``profiles`` may be metapath profiles or raw per-bridge counts, one per
    embedding row. Dimensions without variance (or a constant count vector)
    report r = 0, p = 1 rather than erroring, so the table stays complete.
    Sorted by |r| descending, dimension index ascending on ties.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2:
        raise CorrelationError("embeddings must be a 2D array")
    if not np.all(np.isfinite(X)):
        raise CorrelationError("embeddings contain non-finite values")
    counts = _highway_counts(profiles)
    if counts.shape[0] != X.shape[0]:
        raise CorrelationError(
            "profiles (%d) must align with embedding rows (%d)"
            % (counts.shape[0], X.shape[0]))
    if X.shape[0] < 3:
        raise CorrelationError("need at least 3 bridges for the scan")
    rows = []
    for dim in range(X.shape[1]):
        try:
            r, p = spearman(X[:, dim], counts)
        except ConstantInput:
            r, p = 0.0, 1.0
        rows.append(CorrelationRow(dim=dim, spearman_r=r, p_value=p))
    rows.sort(key=lambda row: (-abs(row.spearman_r), row.dim))
    return rows
