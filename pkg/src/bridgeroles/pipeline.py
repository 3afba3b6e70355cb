"""End-to-end orchestration over the bridge classification stack.

``run_pipeline`` drives the stages in order: ingest the three GeoJSON
inputs, build the heterogeneous graph and feature matrix, train the
variational encoder, derive metapath profiles, classify every bridge,
analyze the latent space (2D layout, clusters, dimension correlations),
and export a self-describing snapshot directory. Each stage failure is
re-raised as a PipelineError naming the stage.

What-if runs recompute nearest-building edges, profiles, and
classifications against fixed embeddings: the encoder never retrains
inside a what-if, which is what keeps the request interactive.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import graphbuild as gb
from .clustering import ClusterAssignment, cluster_with_fallback, min_cluster_size_rule
from .correlation import CorrelationRow, latent_correlation_scan
from .encoder import EncoderConfig, LatentEmbedding, RelGraph, RgcnWeights, train
from .metapath import (
    BridgeClassification,
    BuildingCategory,
    Category,
    CATEGORY_COLORS,
    ClassifierThresholds,
    MetapathProfile,
    classify_all,
    profiles_from_edges,
)
from .reduction import DegenerateData, pca2, umap2

__all__ = [
    "PipelineError",
    "ConfigError",
    "InvalidK",
    "PipelineConfig",
    "CitySnapshot",
    "WhatIfRequest",
    "WhatIfOutcome",
    "run_pipeline",
    "analyze_embeddings",
    "save_snapshot",
    "load_snapshot",
    "save_checkpoint",
    "load_checkpoint",
    "whatif",
    "export_overlay",
    "budget_ranking",
    "write_classification_csv",
    "write_embedding2d_csv",
]

SNAPSHOT_FORMAT_VERSION = 1

# funding priority per category; lower funds first
CATEGORY_PRIORITY = {
    Category.SUPPLY_CHAIN: 0,
    Category.MEDICAL_ACCESS: 1,
    Category.RESIDENTIAL_PROTECTION: 2,
    Category.MIXED: 3,
    Category.BALANCED_MULTI_USE: 4,
}

CLASSIFICATION_COLUMNS = [
    "bridge_id", "name", "lat", "lon",
    "shop_paths", "hospital_paths", "residence_paths", "highway_count",
    "category", "confidence", "cluster_id",
]


class PipelineError(RuntimeError):
    """A stage failed; the stage name travels with the message."""

    def __init__(self, stage: str, message: str):
        super().__init__("[%s] %s" % (stage, message))
        self.stage = stage


class ConfigError(ValueError):
    """The run configuration is malformed."""


class InvalidK(ValueError):
    """A what-if request carried unusable parameters."""


# ---------------------------------------------------------------------------
# configuration


def _reject_unknown(keys, allowed: set, where: str) -> None:
    unknown = set(keys) - allowed
    if unknown:
        raise ConfigError("unknown %s key(s): %s" % (where, ", ".join(sorted(unknown))))


def _thresholds_from(data: dict) -> ClassifierThresholds:
    allowed = {f.name for f in dataclasses.fields(ClassifierThresholds)}
    _reject_unknown(data.keys(), allowed, "thresholds")
    return ClassifierThresholds(**data)


def _encoder_from(data: dict) -> EncoderConfig:
    allowed = {f.name for f in dataclasses.fields(EncoderConfig)}
    _reject_unknown(data.keys(), allowed, "encoder")
    data = dict(data)
    if "layer_dims" in data:
        data["layer_dims"] = tuple(data["layer_dims"])
    if "relations" in data:
        data["relations"] = tuple(data["relations"])
    return EncoderConfig(**data)


def _keys_from(data: dict) -> gb.PropertyKeys:
    allowed = {f.name for f in dataclasses.fields(gb.PropertyKeys)}
    _reject_unknown(data.keys(), allowed, "property_keys")
    return gb.PropertyKeys(**data)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a full run needs; serializable as a flat JSON document."""

    streets_path: str
    bridges_path: str
    buildings_path: str
    out_dir: str = "out"
    k_shop: int = 5
    k_hospital: int = 5
    k_residence: int = 20
    radius_m: float = 2000.0
    cluster_seed: int = 0
    umap_neighbors: int = 15
    umap_min_dist: float = 0.1
    umap_epochs: int = 500
    umap_seed: int = 0
    thresholds: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    property_keys: gb.PropertyKeys = field(default_factory=gb.PropertyKeys)

    def __post_init__(self):
        for name in ("k_shop", "k_hospital", "k_residence"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ConfigError("%s must be an integer >= 1, got %r" % (name, value))
        if not self.radius_m > 0:
            raise ConfigError("radius_m must be positive")
        if not (isinstance(self.umap_neighbors, int) and self.umap_neighbors >= 2):
            raise ConfigError("umap_neighbors must be an integer >= 2")
        if not (isinstance(self.umap_epochs, int) and self.umap_epochs >= 1):
            raise ConfigError("umap_epochs must be an integer >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        allowed = {f.name for f in dataclasses.fields(cls)}
        _reject_unknown(data.keys(), allowed, "config")
        data = dict(data)
        if "thresholds" in data:
            data["thresholds"] = _thresholds_from(data["thresholds"])
        if "encoder" in data:
            data["encoder"] = _encoder_from(data["encoder"])
        if "property_keys" in data:
            data["property_keys"] = _keys_from(data["property_keys"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config %s is not valid JSON: %s" % (path, exc)) from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["encoder"]["layer_dims"] = list(self.encoder.layer_dims)
        data["encoder"]["relations"] = list(self.encoder.relations)
        return data

    def hashable_dict(self) -> dict:
        """Config echo without filesystem locations.

        Input content is hashed separately via the built graph, so two
        runs of the same data from different directories stay equal.
        """
        data = self.to_dict()
        for key in ("streets_path", "bridges_path", "buildings_path", "out_dir"):
            data.pop(key)
        return data

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Same run with every stochastic stage reseeded."""
        return dataclasses.replace(
            self,
            cluster_seed=seed,
            umap_seed=seed,
            encoder=dataclasses.replace(self.encoder, seed=seed),
        )


# ---------------------------------------------------------------------------
# snapshot


@dataclass
class CitySnapshot:
    """Frozen output of one full pipeline run."""

    config: PipelineConfig
    graph: gb.HetGraph
    features: np.ndarray
    embedding: LatentEmbedding
    bridge_embeddings: np.ndarray
    profiles: list[MetapathProfile]
    classifications: list[BridgeClassification]
    coords2d: np.ndarray
    clusters: ClusterAssignment
    correlation: list[CorrelationRow]
    metrics: dict
    train_summary: dict
    content_hash: str
    created_at: str
    weights: Optional[RgcnWeights] = None

    def bridge_ids(self) -> list[int]:
        return self.graph.bridge_ids()

    def cluster_of(self) -> dict[int, int]:
        ids = self.bridge_ids()
        return {bid: int(self.clusters.labels[i]) for i, bid in enumerate(ids)}


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _content_hash(config: PipelineConfig, graph: gb.HetGraph, features: np.ndarray,
                  embedding: LatentEmbedding, coords2d: np.ndarray,
                  cluster_labels: np.ndarray,
                  classifications: Sequence[BridgeClassification],
                  train_summary: dict) -> str:
    """Digest over config, graph, arrays, and outcomes.

    Wall-clock fields (timestamps, per-epoch seconds) stay out so reruns
    of the same inputs and seeds hash identically.
    """
    h = hashlib.sha256()

    def add(tag: str, payload: bytes) -> None:
        h.update(tag.encode())
        h.update(b"\x00")
        h.update(str(len(payload)).encode())
        h.update(b"\x00")
        h.update(payload)

    add("config", _canonical_json(config.hashable_dict()))
    add("graph", _canonical_json(graph.to_dict()))
    for name, arr in (
        ("features", features),
        ("mu", embedding.mu),
        ("logvar", embedding.logvar),
        ("coords2d", coords2d),
        ("cluster_labels", cluster_labels),
    ):
        arr = np.ascontiguousarray(arr)
        add(name + ".shape", repr(arr.shape).encode())
        add(name, arr.tobytes())
    add("node_ids", _canonical_json(list(map(int, embedding.node_ids))))
    add("classifications", _canonical_json([
        [c.bridge_id, c.label, repr(c.confidence), c.total_paths]
        for c in classifications
    ]))
    clean = {k: v for k, v in train_summary.items() if k not in ("seconds",)}
    add("training", _canonical_json(clean))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# stages


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, "%s: %s" % (type(exc).__name__, exc)) from exc


def _ingest(config: PipelineConfig):
    graph = gb.HetGraph()
    streets = gb.load_feature_collection(config.streets_path)
    bridges = gb.load_feature_collection(config.bridges_path)
    buildings = gb.load_feature_collection(config.buildings_path)
    reports = {
        "streets": dataclasses.asdict(gb.ingest_streets(graph, streets, config.property_keys)),
        "bridges": dataclasses.asdict(gb.ingest_bridges(graph, bridges, config.property_keys)),
        "buildings": dataclasses.asdict(gb.ingest_buildings(
            graph, buildings, config.property_keys, config.radius_m)),
    }
    return graph, reports


def _build(config: PipelineConfig, graph: gb.HetGraph):
    gb.snap_bridges(graph)
    gb.knn_building_edges(
        graph, config.k_shop, config.k_hospital, config.k_residence, config.radius_m)
    gb.highway_metapath_counts(graph, config.radius_m)
    return gb.build_features(graph)


def _train(config: PipelineConfig, graph: gb.HetGraph, features: np.ndarray):
    rel_graph = RelGraph.from_hetgraph(graph)
    weights, embedding, report = train(rel_graph, features[rel_graph.node_ids], config.encoder)
    totals = [float(e.total) for e in report.epochs]
    summary = {
        "epochs_run": len(report.epochs),
        "best_epoch": report.best_epoch,
        "stop_reason": report.stop_reason,
        "first_total": totals[0],
        "final_total": totals[-1],
        "totals": [repr(t) for t in totals],
        "auc": None if report.auc is None else repr(report.auc),
        "n_nodes": report.n_nodes,
        "n_pos_edges": report.n_pos_edges,
        "seconds": sum(e.seconds for e in report.epochs),
    }
    return weights, embedding, summary


def analyze_embeddings(config: PipelineConfig, bridge_embeddings: np.ndarray,
                       profiles: Sequence[MetapathProfile]):
    """2D layout, clusters, and dimension correlations for bridge latents.

    Falls back from the neighborhood layout to plain axes projection when
    there are too few bridges, and to zeros below two.  Returns
    (coords2d, clusters, correlation_rows, projection_name).
    """
    n = bridge_embeddings.shape[0]
    k_eff = min(config.umap_neighbors, n - 1)
    if n >= 4 and k_eff >= 2:
        coords = umap2(
            bridge_embeddings,
            n_neighbors=k_eff,
            min_dist=config.umap_min_dist,
            seed=config.umap_seed,
            n_epochs=config.umap_epochs,
        )
        projection = "umap"
    elif n >= 2:
        try:
            coords, _ = pca2(bridge_embeddings)
            projection = "pca"
        except DegenerateData:
            coords = np.zeros((n, 2))
            projection = "degenerate"
    else:
        coords = np.zeros((n, 2))
        projection = "degenerate"
    clusters = cluster_with_fallback(coords, seed=config.cluster_seed)
    correlation = latent_correlation_scan(bridge_embeddings, profiles) if n >= 3 else []
    return coords, clusters, correlation, projection


def run_pipeline(config: PipelineConfig) -> CitySnapshot:
    """Execute every stage and persist the snapshot to config.out_dir."""
    graph, ingest_reports = _stage("ingest", _ingest, config)
    features = _stage("build", _build, config, graph)
    weights, embedding, train_summary = _stage("train", _train, config, graph, features)
    bridge_ids = graph.bridge_ids()
    profiles = _stage(
        "profile", profiles_from_edges, bridge_ids, graph.edges, graph.highway_counts)
    classifications = _stage("classify", classify_all, profiles, config.thresholds)
    bridge_embeddings = embedding.rows_for(bridge_ids)
    coords2d, clusters, correlation, projection = _stage(
        "analyze", analyze_embeddings, config, bridge_embeddings, profiles)

    category_totals = {cat.value: 0 for cat in Category}
    label_totals: dict[str, int] = {}
    for c in classifications:
        category_totals[c.category.value] += 1
        label_totals[c.label] = label_totals.get(c.label, 0) + 1

    content_hash = _content_hash(
        config, graph, features, embedding, coords2d, clusters.labels,
        classifications, train_summary)

    metrics = {
        "counts": graph.counts(),
        "ingest": ingest_reports,
        "training": {k: v for k, v in train_summary.items() if k != "totals"},
        "clustering": {
            "method": clusters.method,
            "n_clusters": clusters.n_clusters,
            "noise_count": clusters.noise_count,
            "noise_ratio": (clusters.noise_count / len(bridge_ids)) if bridge_ids else 0.0,
            "silhouette": clusters.silhouette,
            "min_cluster_size": min_cluster_size_rule(len(bridge_ids)),
            "projection": projection,
        },
        "category_totals": category_totals,
        "label_totals": label_totals,
        "correlation": [
            {"dim": r.dim, "spearman_r": r.spearman_r, "p_value": r.p_value}
            for r in correlation
        ],
        "config": {
            "k_shop": config.k_shop,
            "k_hospital": config.k_hospital,
            "k_residence": config.k_residence,
            "radius_m": config.radius_m,
            "thresholds": dataclasses.asdict(config.thresholds),
            "encoder_seed": config.encoder.seed,
            "umap_seed": config.umap_seed,
            "cluster_seed": config.cluster_seed,
        },
        "content_hash": content_hash,
    }

    snapshot = CitySnapshot(
        config=config,
        graph=graph,
        features=features,
        embedding=embedding,
        bridge_embeddings=bridge_embeddings,
        profiles=list(profiles),
        classifications=list(classifications),
        coords2d=coords2d,
        clusters=clusters,
        correlation=list(correlation),
        metrics=metrics,
        train_summary=train_summary,
        content_hash=content_hash,
        created_at=datetime.now(timezone.utc).isoformat(),
        weights=weights,
    )
    _stage("export", save_snapshot, snapshot, config.out_dir)
    return snapshot


# ---------------------------------------------------------------------------
# persistence


def write_classification_csv(graph: gb.HetGraph, profiles: Sequence[MetapathProfile],
                             classifications: Sequence[BridgeClassification],
                             cluster_of: dict[int, int], path) -> None:
    """One row per bridge; cluster_id is -1 when no clustering ran."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CLASSIFICATION_COLUMNS)
        for prof, cls in zip(profiles, classifications):
            node = graph.nodes[prof.bridge_id]
            writer.writerow([
                prof.bridge_id,
                node.name or "",
                repr(node.geo.lat),
                repr(node.geo.lon),
                prof.shop_paths,
                prof.hospital_paths,
                prof.residence_paths,
                prof.highway_count,
                cls.label,
                repr(cls.confidence),
                cluster_of.get(prof.bridge_id, -1),
            ])


def _write_embeddings_csv(snapshot: CitySnapshot, path: Path) -> None:
    dims = snapshot.bridge_embeddings.shape[1] if len(snapshot.bridge_embeddings) else 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bridge_id"] + ["z%d" % d for d in range(dims)])
        for bid, row in zip(snapshot.bridge_ids(), snapshot.bridge_embeddings):
            writer.writerow([bid] + [repr(float(v)) for v in row])


def write_embedding2d_csv(bridge_ids: Sequence[int], coords2d: np.ndarray,
                          labels: np.ndarray, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bridge_id", "u", "v", "cluster_id"])
        for bid, row, label in zip(bridge_ids, coords2d, labels):
            writer.writerow([bid, repr(float(row[0])), repr(float(row[1])), int(label)])


def export_overlay(snapshot: CitySnapshot) -> dict:
    """Point feature collection with categories and display colors."""
    cluster_of = snapshot.cluster_of()
    feats = []
    for prof, cls in zip(snapshot.profiles, snapshot.classifications):
        node = snapshot.graph.nodes[prof.bridge_id]
        feats.append({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [node.geo.lon, node.geo.lat],
            },
            "properties": {
                "bridge_id": prof.bridge_id,
                "name": node.name or "",
                "category": cls.category.value,
                "label": cls.label,
                "confidence": cls.confidence,
                "shop_paths": prof.shop_paths,
                "hospital_paths": prof.hospital_paths,
                "residence_paths": prof.residence_paths,
                "highway_count": prof.highway_count,
                "cluster_id": cluster_of.get(prof.bridge_id, -1),
                "color": CATEGORY_COLORS[cls.category],
            },
        })
    return {"type": "FeatureCollection", "features": feats}


def save_checkpoint(weights: RgcnWeights, config: EncoderConfig, path) -> None:
    arrays = {key: arr for key, arr in weights.items()}
    arrays["format_version"] = np.array(SNAPSHOT_FORMAT_VERSION)
    arrays["n_hidden"] = np.array(len(weights.hidden))
    np.savez(path, config_json=np.frombuffer(
        _canonical_json(dataclasses.asdict(config) | {
            "layer_dims": list(config.layer_dims),
            "relations": list(config.relations),
        }), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> tuple[RgcnWeights, EncoderConfig]:
    from .encoder import LayerWeights

    with np.load(path) as data:
        config = _encoder_from(json.loads(bytes(data["config_json"]).decode()))
        n_hidden = int(data["n_hidden"])

        def layer(name: str) -> LayerWeights:
            return LayerWeights(
                basis=data["%s.basis" % name],
                coef=data["%s.coef" % name],
                self_loop=data["%s.self_loop" % name],
            )

        weights = RgcnWeights(
            hidden=[layer("hidden%d" % i) for i in range(n_hidden)],
            mu=layer("mu"),
            logvar=layer("logvar"),
        )
    return weights, config


def save_snapshot(snapshot: CitySnapshot, out_dir) -> Path:
    """Write the whole snapshot directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "graph.json").write_text(json.dumps(snapshot.graph.to_dict()))
    np.savez(
        out / "arrays.npz",
        features=snapshot.features,
        mu=snapshot.embedding.mu,
        logvar=snapshot.embedding.logvar,
        node_ids=np.asarray(snapshot.embedding.node_ids, dtype=np.int64),
        bridge_embeddings=snapshot.bridge_embeddings,
        coords2d=snapshot.coords2d,
        cluster_labels=snapshot.clusters.labels,
        bridge_ids=np.asarray(snapshot.bridge_ids(), dtype=np.int64),
    )
    write_classification_csv(
        snapshot.graph, snapshot.profiles, snapshot.classifications,
        snapshot.cluster_of(), out / "classification.csv")
    _write_embeddings_csv(snapshot, out / "embeddings.csv")
    write_embedding2d_csv(
        snapshot.bridge_ids(), snapshot.coords2d, snapshot.clusters.labels,
        out / "embedding2d.csv")
    (out / "metrics.json").write_text(json.dumps(snapshot.metrics, indent=2))
    (out / "overlay.geojson").write_text(json.dumps(export_overlay(snapshot)))
    if snapshot.weights is not None:
        save_checkpoint(snapshot.weights, snapshot.config.encoder, out / "checkpoint.npz")

    manifest = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "created_at": snapshot.created_at,
        "content_hash": snapshot.content_hash,
        "config": snapshot.config.to_dict(),
        "counts": snapshot.graph.counts(),
        "training": snapshot.train_summary,
        "clustering": {
            "method": snapshot.clusters.method,
            "n_clusters": snapshot.clusters.n_clusters,
            "noise_count": snapshot.clusters.noise_count,
            "silhouette": snapshot.clusters.silhouette,
        },
    }
    (out / "snapshot.json").write_text(json.dumps(manifest, indent=2))
    return out


def load_snapshot(out_dir) -> CitySnapshot:
    """Rebuild a snapshot from its directory, verifying the content hash."""
    out = Path(out_dir)
    manifest_path = out / "snapshot.json"
    if not manifest_path.exists():
        raise PipelineError("load", "no snapshot manifest at %s" % manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
        config = PipelineConfig.from_dict(manifest["config"])
        graph = gb.HetGraph.from_dict(json.loads((out / "graph.json").read_text()))
        with np.load(out / "arrays.npz") as data:
            features = data["features"]
            embedding = LatentEmbedding(
                node_ids=[int(v) for v in data["node_ids"]],
                mu=data["mu"],
                logvar=data["logvar"],
            )
            bridge_embeddings = data["bridge_embeddings"]
            coords2d = data["coords2d"]
            cluster_labels = data["cluster_labels"]
        metrics = json.loads((out / "metrics.json").read_text())
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("load", "%s: %s" % (type(exc).__name__, exc)) from exc

    bridge_ids = graph.bridge_ids()
    profiles = profiles_from_edges(bridge_ids, graph.edges, graph.highway_counts)
    classifications = classify_all(profiles, config.thresholds)
    clustering_info = manifest.get("clustering", {})
    clusters = ClusterAssignment(
        labels=cluster_labels,
        method=clustering_info.get("method", "hdbscan"),
        silhouette=clustering_info.get("silhouette"),
        n_clusters=int(clustering_info.get("n_clusters", 0)),
        noise_count=int(clustering_info.get("noise_count", 0)),
    )
    correlation = (
        latent_correlation_scan(bridge_embeddings, profiles) if len(bridge_ids) >= 3 else [])
    train_summary = manifest.get("training", {})

    recomputed = _content_hash(
        config, graph, features, embedding, coords2d, clusters.labels,
        classifications, train_summary)
    stored = manifest.get("content_hash")
    if recomputed != stored:
        raise PipelineError(
            "load", "content hash mismatch: stored %s, recomputed %s" % (stored, recomputed))

    weights = None
    checkpoint = out / "checkpoint.npz"
    if checkpoint.exists():
        weights, _ = load_checkpoint(checkpoint)

    return CitySnapshot(
        config=config,
        graph=graph,
        features=features,
        embedding=embedding,
        bridge_embeddings=bridge_embeddings,
        profiles=profiles,
        classifications=classifications,
        coords2d=coords2d,
        clusters=clusters,
        correlation=correlation,
        metrics=metrics,
        train_summary=train_summary,
        content_hash=stored,
        created_at=manifest.get("created_at", ""),
        weights=weights,
    )


# ---------------------------------------------------------------------------
# what-if


@dataclass(frozen=True)
class WhatIfRequest:
    """Parameter overrides for a recomputation against fixed embeddings."""

    k_shop: Optional[int] = None
    k_hospital: Optional[int] = None
    k_residence: Optional[int] = None
    thresholds: Optional[ClassifierThresholds] = None
    budget_n: Optional[int] = None

    @classmethod
    def from_dict(cls, data: dict, base: ClassifierThresholds) -> "WhatIfRequest":
        if not isinstance(data, dict):
            raise InvalidK("what-if request body must be an object")
        allowed = {"k_shop", "k_hospital", "k_residence", "thresholds", "budget_n"}
        unknown = set(data.keys()) - allowed
        if unknown:
            raise InvalidK("unknown request key(s): %s" % ", ".join(sorted(unknown)))
        thresholds = None
        if data.get("thresholds") is not None:
            override = data["thresholds"]
            if not isinstance(override, dict):
                raise InvalidK("thresholds override must be an object")
            merged = dataclasses.asdict(base)
            extra = set(override.keys()) - set(merged.keys())
            if extra:
                raise InvalidK("unknown threshold key(s): %s" % ", ".join(sorted(extra)))
            merged.update(override)
            try:
                thresholds = ClassifierThresholds(**merged)
            except Exception as exc:
                raise InvalidK("invalid thresholds: %s" % exc) from exc
        return cls(
            k_shop=data.get("k_shop"),
            k_hospital=data.get("k_hospital"),
            k_residence=data.get("k_residence"),
            thresholds=thresholds,
            budget_n=data.get("budget_n"),
        )


@dataclass
class WhatIfOutcome:
    request: dict
    changed: list[dict]
    category_totals_before: dict[str, int]
    category_totals_after: dict[str, int]
    coverage_before: dict[str, int]
    coverage_after: dict[str, int]
    coverage_delta: dict[str, int]
    budget: Optional[list[dict]]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _effective_totals(profiles: Sequence[MetapathProfile]) -> dict[str, int]:
    totals = {c.value: 0 for c in BuildingCategory}
    for p in profiles:
        for c in BuildingCategory:
            totals[c.value] += p.effective_count(c)
    return totals


def budget_ranking(profiles: Sequence[MetapathProfile],
                   classifications: Sequence[BridgeClassification],
                   names: dict[int, str]) -> list[dict]:
    """Funding order: category priority, then confidence, paths, id."""
    rows = []
    for prof, cls in zip(profiles, classifications):
        rows.append({
            "bridge_id": cls.bridge_id,
            "name": names.get(cls.bridge_id, ""),
            "category": cls.category.value,
            "label": cls.label,
            "confidence": cls.confidence,
            "total_paths": cls.total_paths,
            "highway_count": prof.highway_count,
        })
    rows.sort(key=lambda r: (
        CATEGORY_PRIORITY[Category(r["category"])],
        -r["confidence"],
        -r["total_paths"],
        r["bridge_id"],
    ))
    for rank, row in enumerate(rows, start=1):
        row["rank"] = rank
    return rows


def whatif(snapshot: CitySnapshot, request: WhatIfRequest) -> WhatIfOutcome:
    """Recompute coverage and classification under new parameters.

    Embeddings, clusters, and the 2D layout stay fixed; only the
    nearest-building edges, profiles, and the classifier run again.
    """
    config = snapshot.config
    k_shop = config.k_shop if request.k_shop is None else request.k_shop
    k_hospital = config.k_hospital if request.k_hospital is None else request.k_hospital
    k_residence = config.k_residence if request.k_residence is None else request.k_residence
    for name, k in (("k_shop", k_shop), ("k_hospital", k_hospital),
                    ("k_residence", k_residence)):
        if not (isinstance(k, int) and not isinstance(k, bool) and k >= 1):
            raise InvalidK("%s must be an integer >= 1, got %r" % (name, k))
    thresholds = request.thresholds if request.thresholds is not None else config.thresholds

    bridge_ids = snapshot.bridge_ids()
    if request.budget_n is not None:
        b = request.budget_n
        if not (isinstance(b, int) and not isinstance(b, bool) and 1 <= b <= len(bridge_ids)):
            raise InvalidK(
                "budget_n must be an integer in [1, %d], got %r" % (len(bridge_ids), b))

    edges = gb.compute_knn_edges(
        snapshot.graph, k_shop, k_hospital, k_residence, config.radius_m)
    profiles = profiles_from_edges(bridge_ids, edges, snapshot.graph.highway_counts)
    classifications = classify_all(profiles, thresholds)

    names = {bid: snapshot.graph.nodes[bid].name or "" for bid in bridge_ids}
    changed = []
    totals_before = {cat.value: 0 for cat in Category}
    totals_after = {cat.value: 0 for cat in Category}
    for old_p, old_c, new_p, new_c in zip(
            snapshot.profiles, snapshot.classifications, profiles, classifications):
        totals_before[old_c.category.value] += 1
        totals_after[new_c.category.value] += 1
        if old_c.label != new_c.label or old_c.confidence != new_c.confidence:
            changed.append({
                "bridge_id": new_c.bridge_id,
                "name": names.get(new_c.bridge_id, ""),
                "before": {
                    "category": old_c.category.value,
                    "label": old_c.label,
                    "confidence": old_c.confidence,
                    "shop_paths": old_p.shop_paths,
                    "hospital_paths": old_p.hospital_paths,
                    "residence_paths": old_p.residence_paths,
                },
                "after": {
                    "category": new_c.category.value,
                    "label": new_c.label,
                    "confidence": new_c.confidence,
                    "shop_paths": new_p.shop_paths,
                    "hospital_paths": new_p.hospital_paths,
                    "residence_paths": new_p.residence_paths,
                },
            })

    before = _effective_totals(snapshot.profiles)
    after = _effective_totals(profiles)
    delta = {key: after[key] - before[key] for key in before}

    budget = None
    if request.budget_n is not None:
        budget = budget_ranking(profiles, classifications, names)[: request.budget_n]

    echo = {
        "k_shop": k_shop,
        "k_hospital": k_hospital,
        "k_residence": k_residence,
        "thresholds": dataclasses.asdict(thresholds),
        "budget_n": request.budget_n,
    }
    return WhatIfOutcome(
        request=echo,
        changed=changed,
        category_totals_before=totals_before,
        category_totals_after=totals_after,
        coverage_before=before,
        coverage_after=after,
        coverage_delta=delta,
        budget=budget,
    )
