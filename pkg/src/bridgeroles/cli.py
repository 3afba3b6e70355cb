"""Command-line surface for the bridge classification pipeline.

Subcommands mirror the pipeline stages so partial reruns are cheap:

    fetch      download road/bridge/building GeoJSON for a bounding box
    build      ingest GeoJSON and write the graph + feature matrix
    train      fit the encoder on a built graph, write embeddings
    classify   write the classification table for a built graph
    analyze    2D layout, clusters, and correlation for trained embeddings
    run        all stages end to end, writing a verified snapshot
    whatif     recompute coverage for a snapshot under new parameters
    serve      HTTP API (and optional static console) over a snapshot
    export     write the geographic overlay for a snapshot

Staged commands share one artifact directory (--out): build produces
graph.json/features.npy/ingest.json, train adds embedding.npz and
checkpoint.npz, classify and analyze read whatever is present.  `run`
produces the full snapshot directory that whatif/serve/export consume.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import graphbuild as gb
from .clustering import ClusteringError
from .correlation import CorrelationError
from .encoder import EncoderError, LatentEmbedding
from .fetch import BBox, FetchError, fetch_city
from .geo import GeoError
from .metapath import MetapathError, classify_all, profiles_from_edges
from .pipeline import (
    ConfigError,
    InvalidK,
    PipelineConfig,
    PipelineError,
    WhatIfRequest,
    analyze_embeddings,
    export_overlay,
    load_snapshot,
    run_pipeline,
    save_checkpoint,
    whatif,
    write_classification_csv,
    write_embedding2d_csv,
    _build,
    _ingest,
    _train,
)
from .reduction import ReductionError
from .service import ServiceError, serve

KNOWN_ERRORS = (
    PipelineError, ConfigError, InvalidK, FetchError, ServiceError,
    MetapathError, ClusteringError, CorrelationError, ReductionError,
    EncoderError, GeoError, gb.GraphBuildError, OSError,
)


def _load_config(args, require_inputs: bool) -> PipelineConfig:
    if getattr(args, "config", None):
        config = PipelineConfig.from_json(args.config)
    else:
        paths = (getattr(args, "streets", None), getattr(args, "bridges", None),
                 getattr(args, "buildings", None))
        if require_inputs and not all(paths):
            raise ConfigError(
                "need --config FILE or all of --streets/--bridges/--buildings")
        config = PipelineConfig(
            streets_path=paths[0] or "", bridges_path=paths[1] or "",
            buildings_path=paths[2] or "")
    overrides = {}
    for attr, field_name in (("streets", "streets_path"), ("bridges", "bridges_path"),
                             ("buildings", "buildings_path"), ("out", "out_dir")):
        value = getattr(args, attr, None)
        if value:
            overrides[field_name] = value
    if overrides:
        config = dataclasses.replace(config, **overrides)
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    return config


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(out: Path) -> gb.HetGraph:
    path = out / "graph.json"
    if not path.exists():
        raise PipelineError("load", "no graph at %s; run `build` first" % path)
    return gb.HetGraph.from_dict(json.loads(path.read_text()))


def _load_embedding(out: Path) -> LatentEmbedding:
    path = out / "embedding.npz"
    if not path.exists():
        raise PipelineError("load", "no embeddings at %s; run `train` first" % path)
    with np.load(path) as data:
        return LatentEmbedding(
            node_ids=[int(v) for v in data["node_ids"]],
            mu=data["mu"], logvar=data["logvar"])


# --- subcommands ----------------------------------------------------------------


def cmd_fetch(args) -> int:
    parts = args.bbox.split(",")
    if len(parts) != 4:
        raise FetchError("--bbox wants four comma-separated numbers: S,W,N,E")
    try:
        south, west, north, east = (float(p) for p in parts)
    except ValueError as exc:
        raise FetchError("--bbox values must be numbers: %s" % exc) from exc
    box = BBox(south=south, west=west, north=north, east=east)
    paths = fetch_city(box, args.out, endpoint=args.endpoint)
    for name, path in paths.items():
        count = len(json.loads(path.read_text())["features"])
        print("%s: %d features -> %s" % (name, count, path))
    return 0


def cmd_build(args) -> int:
    config = _load_config(args, require_inputs=True)
    out = _out_dir(config)
    graph, reports = _ingest(config)
    features = _build(config, graph)
    (out / "graph.json").write_text(json.dumps(graph.to_dict()))
    np.save(out / "features.npy", features)
    (out / "ingest.json").write_text(json.dumps(reports, indent=2))
    counts = graph.counts()
    print("graph: %(bridge)d bridges, %(street)d street junctions, "
          "%(building)d buildings" % counts)
    print("features: %d x %d -> %s" % (*features.shape, out / "features.npy"))
    return 0


def cmd_train(args) -> int:
    config = _load_config(args, require_inputs=False)
    out = _out_dir(config)
    graph = _load_graph(out)
    features_path = out / "features.npy"
    if not features_path.exists():
        raise PipelineError("load", "no features at %s; run `build` first" % features_path)
    features = np.load(features_path)
    weights, embedding, summary = _train(config, graph, features)
    np.savez(out / "embedding.npz",
             node_ids=np.asarray(embedding.node_ids, dtype=np.int64),
             mu=embedding.mu, logvar=embedding.logvar)
    save_checkpoint(weights, config.encoder, out / "checkpoint.npz")
    (out / "train.json").write_text(json.dumps(summary, indent=2))
    print("trained %d epochs (best %d, %s); final loss %.4f"
          % (summary["epochs_run"], summary["best_epoch"], summary["stop_reason"],
             summary["final_total"]))
    print("embeddings -> %s" % (out / "embedding.npz"))
    return 0


def cmd_classify(args) -> int:
    config = _load_config(args, require_inputs=False)
    out = _out_dir(config)
    graph = _load_graph(out)
    bridge_ids = graph.bridge_ids()
    profiles = profiles_from_edges(bridge_ids, graph.edges, graph.highway_counts)
    classifications = classify_all(profiles, config.thresholds)
    cluster_of = {}
    analysis_path = out / "analysis.npz"
    if analysis_path.exists():
        with np.load(analysis_path) as data:
            cluster_of = {int(b): int(l)
                          for b, l in zip(data["bridge_ids"], data["cluster_labels"])}
    write_classification_csv(
        graph, profiles, classifications, cluster_of, out / "classification.csv")
    totals: dict[str, int] = {}
    for c in classifications:
        totals[c.label] = totals.get(c.label, 0) + 1
    for label in sorted(totals):
        print("%-28s %d" % (label, totals[label]))
    print("table -> %s" % (out / "classification.csv"))
    return 0


def cmd_analyze(args) -> int:
    config = _load_config(args, require_inputs=False)
    out = _out_dir(config)
    graph = _load_graph(out)
    embedding = _load_embedding(out)
    bridge_ids = graph.bridge_ids()
    profiles = profiles_from_edges(bridge_ids, graph.edges, graph.highway_counts)
    bridge_embeddings = embedding.rows_for(bridge_ids)
    coords2d, clusters, correlation, projection = analyze_embeddings(
        config, bridge_embeddings, profiles)
    write_embedding2d_csv(bridge_ids, coords2d, clusters.labels, out / "embedding2d.csv")
    np.savez(out / "analysis.npz",
             bridge_ids=np.asarray(bridge_ids, dtype=np.int64),
             coords2d=coords2d, cluster_labels=clusters.labels)
    summary = {
        "projection": projection,
        "clustering": {
            "method": clusters.method,
            "n_clusters": clusters.n_clusters,
            "noise_count": clusters.noise_count,
            "silhouette": clusters.silhouette,
        },
        "correlation": [
            {"dim": r.dim, "spearman_r": r.spearman_r, "p_value": r.p_value}
            for r in correlation
        ],
    }
    (out / "analysis.json").write_text(json.dumps(summary, indent=2))
    print("%s layout, %s: %d clusters, %d noise"
          % (projection, clusters.method, clusters.n_clusters, clusters.noise_count))
    if correlation:
        top = correlation[0]
        print("strongest dimension: z%d (spearman %.3f)" % (top.dim, top.spearman_r))
    print("analysis -> %s" % (out / "analysis.json"))
    return 0


def cmd_run(args) -> int:
    config = _load_config(args, require_inputs=True)
    snapshot = run_pipeline(config)
    totals = snapshot.metrics["label_totals"]
    for label in sorted(totals):
        print("%-28s %d" % (label, totals[label]))
    print("clustering: %s (%d clusters, %d noise)"
          % (snapshot.clusters.method, snapshot.clusters.n_clusters,
             snapshot.clusters.noise_count))
    print("snapshot %s -> %s" % (snapshot.content_hash[:12], config.out_dir))
    return 0


def cmd_whatif(args) -> int:
    snapshot = load_snapshot(args.out)
    thresholds = None
    overrides = {name: getattr(args, name) for name in (
        "supply_min", "medical_min", "residential_min", "balanced_max")
        if getattr(args, name) is not None}
    if overrides:
        merged = dataclasses.asdict(snapshot.config.thresholds) | overrides
        thresholds = type(snapshot.config.thresholds)(**merged)
    request = WhatIfRequest(
        k_shop=args.k_shop, k_hospital=args.k_hospital, k_residence=args.k_residence,
        thresholds=thresholds, budget_n=args.budget)
    outcome = whatif(snapshot, request)
    document = json.dumps(outcome.to_dict(), indent=2)
    if args.json_out:
        Path(args.json_out).write_text(document)
        print("outcome -> %s" % args.json_out)
    else:
        print(document)
    return 0


def cmd_serve(args) -> int:
    snapshot = load_snapshot(args.out)
    serve(snapshot, host=args.host, port=args.port, static_dir=args.static_dir)
    return 0


def cmd_export(args) -> int:
    snapshot = load_snapshot(args.out)
    overlay = export_overlay(snapshot)
    target = Path(args.overlay_out or (Path(args.out) / "overlay.geojson"))
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(overlay))
    print("overlay: %d features -> %s" % (len(overlay["features"]), target))
    return 0


# --- parser ---------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON file")
    parser.add_argument("--seed", type=int, help="reseed encoder, layout, and clustering")
    parser.add_argument("--out", help="artifact directory (default: out)")


def _add_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--streets", help="streets GeoJSON path")
    parser.add_argument("--bridges", help="bridges GeoJSON path")
    parser.add_argument("--buildings", help="buildings GeoJSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgeroles",
        description="Classify city bridges into disaster-preparedness roles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download GeoJSON layers for a bounding box")
    p.add_argument("--bbox", required=True, help="south,west,north,east in degrees")
    p.add_argument("--out", default="data", help="directory for the GeoJSON files")
    p.add_argument("--endpoint", default=None, help="alternative API endpoint")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("build", help="ingest GeoJSON into graph + features")
    _add_common(p)
    _add_inputs(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="fit the encoder on a built graph")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="write the classification table")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("analyze", help="layout, clusters, and correlations")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="all stages end to end")
    _add_common(p)
    _add_inputs(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("whatif", help="recompute coverage under new parameters")
    p.add_argument("--out", default="out", help="snapshot directory")
    p.add_argument("--k-shop", type=int, dest="k_shop")
    p.add_argument("--k-hospital", type=int, dest="k_hospital")
    p.add_argument("--k-residence", type=int, dest="k_residence")
    p.add_argument("--budget", type=int, help="rank the top-N bridges to fund")
    p.add_argument("--supply-min", type=float, dest="supply_min")
    p.add_argument("--medical-min", type=float, dest="medical_min")
    p.add_argument("--residential-min", type=float, dest="residential_min")
    p.add_argument("--balanced-max", type=float, dest="balanced_max")
    p.add_argument("--json-out", dest="json_out", help="write the outcome to a file")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="HTTP API over a snapshot")
    p.add_argument("--out", default="out", help="snapshot directory")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", dest="static_dir", help="serve this directory at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="write the geographic overlay")
    p.add_argument("--out", default="out", help="snapshot directory")
    p.add_argument("--overlay-out", dest="overlay_out", help="overlay file path")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is cmd_fetch and args.endpoint is None:
        from .fetch import DEFAULT_ENDPOINT
        args.endpoint = DEFAULT_ENDPOINT
    try:
        return args.func(args)
    except KNOWN_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
