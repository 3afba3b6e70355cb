"""Relational graph variational autoencoder trained with hand-rolled numpy.

Two ReLU graph-convolution layers feed two linear heads producing the mean
and log-variance of a diagonal Gaussian over 32 latent dimensions per node.
Per-relation weight matrices share a small basis (W_r = sum_b a_rb V_b) and
every layer adds a self-loop transform.  The decoder scores node pairs with
a sigmoid inner product; the loss is mean binary cross-entropy over the
observed edges plus an equal number of sampled non-edges, together with a
KL term against the unit Gaussian whose weight anneals linearly.  All
gradients are derived by hand and checked against finite differences.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_RELATIONS = ("street_to_street", "street_to_bridge")


class EncoderError(ValueError):
    """Base class for encoder configuration and training failures."""


class EmptyEdgeSet(EncoderError):
    """Training requires at least one positive edge."""


class NonFiniteLoss(EncoderError):
    """Loss produced NaN or infinity."""


@dataclass(frozen=True)
class EncoderConfig:
    layer_dims: tuple[int, ...] = (21, 128, 128, 32)
    relations: tuple[str, ...] = DEFAULT_RELATIONS
    num_bases: int = 2
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    beta_start: float = 0.01
    beta_end: float = 1.0
    beta_epochs: int = 50
    neg_ratio: float = 1.0
    patience: int = 10
    min_delta: float = 1e-4
    max_epochs: int = 200
    holdout_fraction: float = 0.0
    logvar_clip: float = 20.0
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.layer_dims) != 4:
            raise EncoderError("layer_dims must have four entries (in, h1, h2, latent)")
        if any(d < 1 for d in self.layer_dims):
            raise EncoderError("layer dimensions must be positive")
        if not self.relations:
            raise EncoderError("at least one relation is required")
        if self.num_bases < 1:
            raise EncoderError("num_bases must be positive")
        if self.learning_rate <= 0 or self.neg_ratio <= 0:
            raise EncoderError("learning_rate and neg_ratio must be positive")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise EncoderError("holdout_fraction must be in [0, 1)")
        if self.patience < 1 or self.max_epochs < 1:
            raise EncoderError("patience and max_epochs must be positive")


class RelGraph:
    """Encoder input graph: node count plus undirected edge lists per relation."""

    def __init__(
        self,
        n: int,
        rel_edges: dict[str, Sequence[tuple[int, int]]],
        node_ids: Optional[Sequence[int]] = None,
    ) -> None:
        if n < 1:
            raise EncoderError("graph must have at least one node")
        self.n = n
        self.rel_edges: dict[str, np.ndarray] = {}
        for name, pairs in rel_edges.items():
            arr = np.asarray(sorted({(min(a, b), max(a, b)) for a, b in pairs}), dtype=int)
            arr = arr.reshape(-1, 2)
            if len(arr) and (arr.min() < 0 or arr.max() >= n):
                raise EncoderError(f"relation {name}: edge endpoint out of range")
            self.rel_edges[name] = arr
        self.node_ids = list(node_ids) if node_ids is not None else list(range(n))

    @classmethod
    def from_hetgraph(cls, graph) -> "RelGraph":
        """Street and bridge nodes only; buildings stay out of the encoder."""
        from .graphbuild import NodeKind, RelationKind

        keep = [nd.id for nd in graph.nodes if nd.kind in (NodeKind.STREET, NodeKind.BRIDGE)]
        remap = {old: new for new, old in enumerate(keep)}
        rel_edges = {
            RelationKind.STREET_TO_STREET.value: [
                (remap[a], remap[b]) for a, b in graph.edges[RelationKind.STREET_TO_STREET]
            ],
            RelationKind.STREET_TO_BRIDGE.value: [
                (remap[a], remap[b]) for a, b in graph.edges[RelationKind.STREET_TO_BRIDGE]
            ],
        }
        return cls(len(keep), rel_edges, node_ids=keep)

    def positive_edges(self, relations: Sequence[str]) -> np.ndarray:
        parts = [self.rel_edges.get(r, np.empty((0, 2), dtype=int)) for r in relations]
        if not parts:
            return np.empty((0, 2), dtype=int)
        merged = {tuple(e) for part in parts for e in part}
        return np.asarray(sorted(merged), dtype=int).reshape(-1, 2)

    def adjacency(self, relations: Sequence[str]) -> list[sp.csr_matrix]:
        """Row-normalised adjacency per relation; zero rows stay zero."""
        mats = []
        for name in relations:
            edges = self.rel_edges.get(name, np.empty((0, 2), dtype=int))
            if len(edges) == 0:
                mats.append(sp.csr_matrix((self.n, self.n)))
                continue
            rows = np.concatenate([edges[:, 0], edges[:, 1]])
            cols = np.concatenate([edges[:, 1], edges[:, 0]])
            a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n, self.n))
            deg = np.asarray(a.sum(axis=1)).ravel()
            inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
            mats.append(sp.diags(inv) @ a)
        return mats


@dataclass
class LayerWeights:
    basis: np.ndarray  # (num_bases, d_out, d_in)
    coef: np.ndarray  # (num_relations, num_bases)
    self_loop: np.ndarray  # (d_out, d_in)

    def relation_matrices(self) -> np.ndarray:
        return np.einsum("rb,boi->roi", self.coef, self.basis)

    def copy(self) -> "LayerWeights":
        return LayerWeights(self.basis.copy(), self.coef.copy(), self.self_loop.copy())


@dataclass
class RgcnWeights:
    hidden: list[LayerWeights]
    mu: LayerWeights
    logvar: LayerWeights

    def named_layers(self) -> Iterator[tuple[str, LayerWeights]]:
        for i, lw in enumerate(self.hidden):
            yield f"hidden{i}", lw
        yield "mu", self.mu
        yield "logvar", self.logvar

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for name, lw in self.named_layers():
            yield f"{name}.basis", lw.basis
            yield f"{name}.coef", lw.coef
            yield f"{name}.self_loop", lw.self_loop

    def copy(self) -> "RgcnWeights":
        return RgcnWeights([lw.copy() for lw in self.hidden], self.mu.copy(), self.logvar.copy())

    def param_count(self) -> int:
        return sum(arr.size for _, arr in self.items())


def basis_param_count(num_relations: int, num_bases: int, d_out: int, d_in: int) -> int:
    """Parameters of one basis-decomposed relational transform."""
    return num_bases * d_out * d_in + num_relations * num_bases


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_weights(config: EncoderConfig, rng: np.random.Generator) -> RgcnWeights:
    dims = config.layer_dims
    r, b = len(config.relations), config.num_bases

    def layer(d_in: int, d_out: int) -> LayerWeights:
        return LayerWeights(
            basis=_glorot(rng, (b, d_out, d_in), d_in, d_out),
            coef=_glorot(rng, (r, b), b, r),
            self_loop=_glorot(rng, (d_out, d_in), d_in, d_out),
        )

    hidden = [layer(dims[0], dims[1]), layer(dims[1], dims[2])]
    return RgcnWeights(hidden=hidden, mu=layer(dims[2], dims[3]), logvar=layer(dims[2], dims[3]))


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input H of each hidden layer
    messages: list[list[np.ndarray]]  # A_r @ H per hidden layer
    pre_acts: list[np.ndarray]  # S of each hidden layer
    head_input: np.ndarray  # H after the last hidden layer
    head_messages: list[np.ndarray]  # A_r @ head_input (shared by both heads)
    mu: np.ndarray
    logvar_raw: np.ndarray
    logvar: np.ndarray


def _layer_apply(H: np.ndarray, messages: list[np.ndarray], lw: LayerWeights) -> np.ndarray:
    rel = lw.relation_matrices()
    S = H @ lw.self_loop.T
    for r in range(len(messages)):
        S += messages[r] @ rel[r].T
    return S


def rgcn_forward(
    X: np.ndarray,
    adj: list[sp.csr_matrix],
    weights: RgcnWeights,
    logvar_clip: float = 20.0,
) -> ForwardCache:
    """Two ReLU message-passing layers, then linear mu / log-variance heads."""
    H = np.asarray(X, dtype=float)
    inputs, messages, pre_acts = [], [], []
    for lw in weights.hidden:
        M = [A @ H for A in adj]
        S = _layer_apply(H, M, lw)
        inputs.append(H)
        messages.append(M)
        pre_acts.append(S)
        H = np.maximum(S, 0.0)
    head_messages = [A @ H for A in adj]
    mu = _layer_apply(H, head_messages, weights.mu)
    logvar_raw = _layer_apply(H, head_messages, weights.logvar)
    logvar = np.clip(logvar_raw, -logvar_clip, logvar_clip)
    return ForwardCache(
        inputs=inputs,
        messages=messages,
        pre_acts=pre_acts,
        head_input=H,
        head_messages=head_messages,
        mu=mu,
        logvar_raw=logvar_raw,
        logvar=logvar,
    )


def reparameterize(mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return mu + np.exp(logvar / 2.0) * eps


def decode_edge(z_i: np.ndarray, z_j: np.ndarray) -> float:
    """Probability that an edge joins the two embedded nodes."""
    return float(1.0 / (1.0 + np.exp(-float(np.dot(z_i, z_j)))))


def edge_logits(z: np.ndarray, edges: np.ndarray) -> np.ndarray:
    if len(edges) == 0:
        return np.zeros(0)
    return np.einsum("ij,ij->i", z[edges[:, 0]], z[edges[:, 1]])


def beta_schedule(epoch: int, config: EncoderConfig) -> float:
    """Linear KL warm-up: beta_start at epoch 0, beta_end from beta_epochs on."""
    if config.beta_epochs <= 0:
        return config.beta_end
    frac = min(1.0, epoch / config.beta_epochs)
    return config.beta_start + (config.beta_end - config.beta_start) * frac


def elbo_terms(
    z: np.ndarray,
    mu: np.ndarray,
    logvar: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    beta: float,
) -> tuple[float, float, float]:
    """(total, recon, kl): mean BCE over pos+neg pairs plus beta-weighted KL."""
    if len(pos) == 0:
        raise EmptyEdgeSet("reconstruction loss needs at least one positive edge")
    lp = edge_logits(z, pos)
    ln = edge_logits(z, neg)
    # softplus(-l) for targets 1, softplus(l) for targets 0, numerically stable.
    recon = float(
        (np.logaddexp(0.0, -lp).sum() + np.logaddexp(0.0, ln).sum()) / (len(lp) + len(ln))
    )
    kl = float(0.5 * np.sum(np.exp(logvar) + mu**2 - 1.0 - logvar) / len(mu))
    total = recon + beta * kl
    if not math.isfinite(total):
        raise NonFiniteLoss(f"loss is not finite (recon={recon}, kl={kl})")
    return total, recon, kl


def _zero_like_weights(weights: RgcnWeights) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in weights.items()}


def _head_backward(
    G_out: np.ndarray,
    lw: LayerWeights,
    H_in: np.ndarray,
    messages: list[np.ndarray],
    adj: list[sp.csr_matrix],
    grads: dict[str, np.ndarray],
    prefix: str,
) -> np.ndarray:
    """Grads for one linear R-GCN transform; returns gradient w.r.t. H_in."""
    rel = lw.relation_matrices()
    d_rel = np.stack([G_out.T @ messages[r] for r in range(len(messages))])
    grads[f"{prefix}.self_loop"] += G_out.T @ H_in
    grads[f"{prefix}.basis"] += np.einsum("rb,roi->boi", lw.coef, d_rel)
    grads[f"{prefix}.coef"] += np.einsum("roi,boi->rb", d_rel, lw.basis)
    G_H = G_out @ lw.self_loop
    for r in range(len(messages)):
        G_H += adj[r].T @ (G_out @ rel[r])
    return G_H


def backward(
    cache: ForwardCache,
    z: np.ndarray,
    eps: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    beta: float,
    adj: list[sp.csr_matrix],
    weights: RgcnWeights,
    logvar_clip: float,
) -> dict[str, np.ndarray]:
    """Analytic gradients of the total loss for every weight tensor."""
    n, _ = cache.mu.shape
    m = len(pos) + len(neg)
    grads = _zero_like_weights(weights)

    G_z = np.zeros_like(z)
    for edges, target in ((pos, 1.0), (neg, 0.0)):
        if len(edges) == 0:
            continue
        logits = edge_logits(z, edges)
        # exp may overflow to inf for very negative logits; the sigmoid
        # still saturates to exactly 0.0, so only the warning is spurious
        with np.errstate(over="ignore"):
            coeff = (1.0 / (1.0 + np.exp(-logits)) - target) / m
        np.add.at(G_z, edges[:, 0], coeff[:, None] * z[edges[:, 1]])
        np.add.at(G_z, edges[:, 1], coeff[:, None] * z[edges[:, 0]])

    G_mu = G_z + beta * cache.mu / n
    G_logvar = G_z * eps * np.exp(cache.logvar / 2.0) * 0.5
    G_logvar += beta * (np.exp(cache.logvar) - 1.0) / (2.0 * n)
    inside = (cache.logvar_raw > -logvar_clip) & (cache.logvar_raw < logvar_clip)
    G_logvar_raw = np.where(inside, G_logvar, 0.0)

    G_H = _head_backward(G_mu, weights.mu, cache.head_input, cache.head_messages, adj, grads, "mu")
    G_H += _head_backward(
        G_logvar_raw, weights.logvar, cache.head_input, cache.head_messages, adj, grads, "logvar"
    )

    for i in reversed(range(len(weights.hidden))):
        G_S = G_H * (cache.pre_acts[i] > 0.0)
        G_H = _head_backward(
            G_S, weights.hidden[i], cache.inputs[i], cache.messages[i], adj, grads, f"hidden{i}"
        )
    return grads


class _Adam:
    def __init__(self, config: EncoderConfig, weights: RgcnWeights) -> None:
        self.lr = config.learning_rate
        self.b1, self.b2, self.eps = config.adam_beta1, config.adam_beta2, config.adam_eps
        self.t = 0
        self.m = _zero_like_weights(weights)
        self.v = _zero_like_weights(weights)

    def step(self, weights: RgcnWeights, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        for name, arr in weights.items():
            g = grads[name]
            self.m[name] = self.b1 * self.m[name] + (1.0 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1.0 - self.b2) * g * g
            arr -= self.lr * (self.m[name] / bc1) / (np.sqrt(self.v[name] / bc2) + self.eps)


def sample_negatives(
    rng: np.random.Generator, n: int, forbidden: set[tuple[int, int]], count: int
) -> np.ndarray:
    """Uniform unordered non-edge pairs, sampled with replacement."""
    out: list[tuple[int, int]] = []
    max_possible = n * (n - 1) // 2 - len(forbidden)
    if max_possible <= 0:
        raise EncoderError("graph has no non-edges to sample")
    for _ in range(100):
        need = count - len(out)
        if need <= 0:
            break
        a = rng.integers(0, n, size=2 * need + 8)
        b = rng.integers(0, n, size=2 * need + 8)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        for x, y in zip(lo, hi):
            if x == y or (int(x), int(y)) in forbidden:
                continue
            out.append((int(x), int(y)))
            if len(out) == count:
                break
        if len(out) == count:
            break
    else:
        # Dense pathological graphs: enumerate the remaining non-edges.
        pool = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if (i, j) not in forbidden
        ]
        idx = rng.integers(0, len(pool), size=count - len(out))
        out.extend(pool[i] for i in idx)
    return np.asarray(out, dtype=int).reshape(-1, 2)


@dataclass
class EpochStats:
    epoch: int
    total: float
    recon: float
    kl: float
    beta: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list[EpochStats]
    best_epoch: int
    stop_reason: str
    n_nodes: int
    n_pos_edges: int
    auc: Optional[float] = None

    def totals(self) -> np.ndarray:
        return np.array([e.total for e in self.epochs])


@dataclass
class LatentEmbedding:
    node_ids: list[int]
    mu: np.ndarray
    logvar: np.ndarray

    def rows_for(self, ids: Sequence[int]) -> np.ndarray:
        index = {nid: row for row, nid in enumerate(self.node_ids)}
        return self.mu[[index[i] for i in ids]]


def _rank_auc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    from scipy.stats import rankdata

    scores = np.concatenate([pos_scores, neg_scores])
    ranks = rankdata(scores)
    n_pos, n_neg = len(pos_scores), len(neg_scores)
    r_pos = ranks[:n_pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def train(
    rel_graph: RelGraph, X: np.ndarray, config: EncoderConfig = EncoderConfig()
) -> tuple[RgcnWeights, LatentEmbedding, TrainReport]:
    """Full training loop; returns best weights, mu-mode embedding, and report.

    Negatives are resampled every epoch.  Early stopping watches the total
    training loss: when it fails to improve on the best seen value by more
    than min_delta for patience consecutive epochs, training stops and the
    weights from the best epoch are restored before the final inference
    pass.  Because the KL weight keeps annealing upward, this tends to halt
    runs once the rising regularisation outweighs reconstruction gains,
    which is exactly the point past which embeddings start to wash out.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != rel_graph.n:
        raise EncoderError(f"feature rows {X.shape[0]} != node count {rel_graph.n}")
    if X.shape[1] != config.layer_dims[0]:
        raise EncoderError(f"feature width {X.shape[1]} != layer_dims[0] {config.layer_dims[0]}")

    pos_all = rel_graph.positive_edges(config.relations)
    if len(pos_all) == 0:
        raise EmptyEdgeSet("no positive edges in the configured relations")

    rng = np.random.default_rng(config.seed)
    held = np.empty((0, 2), dtype=int)
    pos = pos_all
    if config.holdout_fraction > 0 and len(pos_all) >= 10:
        perm = rng.permutation(len(pos_all))
        n_held = max(1, int(round(config.holdout_fraction * len(pos_all))))
        held = pos_all[perm[:n_held]]
        pos = pos_all[perm[n_held:]]

    forbidden = {(int(a), int(b)) for a, b in pos_all}
    weights = init_weights(config, rng)
    adj = rel_graph.adjacency(config.relations)
    optimiser = _Adam(config, weights)
    latent_dim = config.layer_dims[-1]

    best_total = math.inf
    best_epoch = -1
    best_weights: Optional[RgcnWeights] = None
    stop_reason = "max_epochs"
    epochs: list[EpochStats] = []
    n_neg = max(1, int(round(config.neg_ratio * len(pos))))

    for epoch in range(config.max_epochs):
        t0 = time.perf_counter()
        beta = beta_schedule(epoch, config)
        eps = rng.standard_normal((rel_graph.n, latent_dim))
        neg = sample_negatives(rng, rel_graph.n, forbidden, n_neg)

        cache = rgcn_forward(X, adj, weights, config.logvar_clip)
        z = reparameterize(cache.mu, cache.logvar, eps)
        try:
            total, recon, kl = elbo_terms(z, cache.mu, cache.logvar, pos, neg, beta)
        except NonFiniteLoss as exc:
            raise NonFiniteLoss(f"epoch {epoch}: {exc}") from exc

        if total < best_total - config.min_delta:
            best_total = total
            best_epoch = epoch
            best_weights = weights.copy()
        elif epoch - best_epoch >= config.patience:
            epochs.append(EpochStats(epoch, total, recon, kl, beta, time.perf_counter() - t0))
            stop_reason = "early_stopping"
            break

        grads = backward(cache, z, eps, pos, neg, beta, adj, weights, config.logvar_clip)
        optimiser.step(weights, grads)
        epochs.append(EpochStats(epoch, total, recon, kl, beta, time.perf_counter() - t0))

    if best_weights is None:
        best_epoch = len(epochs) - 1
        best_weights = weights.copy()

    final = rgcn_forward(X, adj, best_weights, config.logvar_clip)
    embedding = LatentEmbedding(node_ids=list(rel_graph.node_ids), mu=final.mu, logvar=final.logvar)

    auc = None
    if len(held) > 0:
        neg_eval = sample_negatives(rng, rel_graph.n, forbidden, len(held))
        auc = _rank_auc(edge_logits(final.mu, held), edge_logits(final.mu, neg_eval))

    report = TrainReport(
        epochs=epochs,
        best_epoch=best_epoch,
        stop_reason=stop_reason,
        n_nodes=rel_graph.n,
        n_pos_edges=len(pos_all),
        auc=auc,
    )
    return best_weights, embedding, report


# --- gradient verification ------------------------------------------------------


def _default_check_graph(config: EncoderConfig, rng: np.random.Generator) -> tuple[RelGraph, np.ndarray]:
    n = 8
    rel_edges = {
        config.relations[0]: [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (0, 7)],
    }
    if len(config.relations) > 1:
        rel_edges[config.relations[1]] = [(0, 4), (2, 6), (1, 5)]
    X = rng.standard_normal((n, config.layer_dims[0]))
    return RelGraph(n, rel_edges), X


def grad_check(
    config: Optional[EncoderConfig] = None,
    rel_graph: Optional[RelGraph] = None,
    X: Optional[np.ndarray] = None,
    n_checks: int = 20,
    step: float = 1e-5,
    seed: int = 0,
    corrupt: bool = False,
) -> float:
    """Max relative error between analytic and central finite-difference grads.

    Samples n_checks weight coordinates.  With ``corrupt=True`` the analytic
    gradients are deliberately shifted so the check must report failure;
    this guards the checker itself against false positives.
    """
    if config is None:
        config = EncoderConfig(layer_dims=(6, 10, 10, 4), max_epochs=1, seed=seed)
    rng = np.random.default_rng(seed)
    if rel_graph is None or X is None:
        rel_graph, X = _default_check_graph(config, rng)

    weights = init_weights(config, rng)
    adj = rel_graph.adjacency(config.relations)
    pos = rel_graph.positive_edges(config.relations)
    if len(pos) == 0:
        raise EmptyEdgeSet("gradient check needs positive edges")
    forbidden = {(int(a), int(b)) for a, b in pos}
    neg = sample_negatives(rng, rel_graph.n, forbidden, len(pos))
    eps = rng.standard_normal((rel_graph.n, config.layer_dims[-1]))
    beta = 0.7  # exercise both loss terms

    def loss_value() -> float:
        cache = rgcn_forward(X, adj, weights, config.logvar_clip)
        z = reparameterize(cache.mu, cache.logvar, eps)
        return elbo_terms(z, cache.mu, cache.logvar, pos, neg, beta)[0]

    cache = rgcn_forward(X, adj, weights, config.logvar_clip)
    z = reparameterize(cache.mu, cache.logvar, eps)
    grads = backward(cache, z, eps, pos, neg, beta, adj, weights, config.logvar_clip)

    names = [name for name, _ in weights.items()]
    tensors = dict(weights.items())
    worst = 0.0
    for _ in range(n_checks):
        name = names[int(rng.integers(0, len(names)))]
        arr = tensors[name]
        flat = int(rng.integers(0, arr.size))
        idx = np.unravel_index(flat, arr.shape)
        analytic = float(grads[name][idx])
        if corrupt:
            analytic += 0.05 * (1.0 + abs(analytic))
        orig = float(arr[idx])
        arr[idx] = orig + step
        up = loss_value()
        arr[idx] = orig - step
        down = loss_value()
        arr[idx] = orig
        fd = (up - down) / (2.0 * step)
        denom = max(abs(analytic), abs(fd), 1e-8)
        err = abs(analytic - fd) / denom
        if abs(analytic) < 1e-10 and abs(fd) < 1e-10:
            err = 0.0
        worst = max(worst, err)
    return worst
