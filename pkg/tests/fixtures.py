"""Shared synthetic fixtures for encoder and pipeline tests."""

from __future__ import annotations

import numpy as np

from bridgeroles.encoder import RelGraph


def two_clique_graph(shift: float = 0.3, feature_seed: int = 1) -> tuple[RelGraph, np.ndarray]:
    """Two 50-node cliques joined by a single cross edge, 21-dim features.

    The cliques get mildly different feature means (like two neighbourhoods
    with different building stock), small enough that an untrained encoder
    stays below the link-prediction gate while a trained one clears it.
    """
    edges = []
    for base in (0, 50):
        for i in range(50):
            for j in range(i + 1, 50):
                edges.append((base + i, base + j))
    edges.append((0, 50))
    graph = RelGraph(100, {"street_to_street": edges})
    rng = np.random.default_rng(feature_seed)
    X = rng.standard_normal((100, 21))
    X[:50] += shift
    X[50:] -= shift
    return graph, X
