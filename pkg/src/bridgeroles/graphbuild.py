"""Heterogeneous city graph: GeoJSON ingestion, topology, and node features.

Node kinds are bridges, street junctions, and buildings.  Streets come in as
LineString features and are deduplicated on coordinates rounded to 1e-7
degrees; bridges must carry a name; buildings are categorised as shop,
hospital, or residence and dropped when farther than the neighbourhood
radius from every bridge.  On top of the assembled graph this module
computes snapping edges, k-nearest building edges, Brandes betweenness,
trunk-road reachability counts, and the 21-column feature matrix consumed
by the encoder.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np
from scipy.spatial import cKDTree

from .geo import GeoPoint, PlanePoint, TransverseMercator, ZONE9_SPHERE, haversine_m

FEATURE_DIM = 21
DEFAULT_RADIUS_M = 2000.0
COORD_DECIMALS = 7  # ~1 cm; junction dedup resolution in degrees

# Column layout of the feature matrix.
F_SPAN = 0
F_YEAR = 1
F_DEGREE = 2
F_BETWEENNESS = 3
F_HIGHWAY_COUNT = 4
F_SHOP_EDGES = 5
F_HOSPITAL_EDGES = 6
F_RESIDENCE_EDGES = 7
F_IS_HIGHWAY = 8
F_ONEHOT_BRIDGE = 9
F_ONEHOT_STREET = 10
F_ONEHOT_BUILDING = 11
F_PLANE_X = 12
F_PLANE_Y = 13
F_TRUNK_DIST = 14
F_STREET_DENSITY = 15
F_SHOP_DIST = 16
F_HOSPITAL_DIST = 17
F_RESIDENCE_DIST = 18
F_BUILDING_COUNT = 19
F_BIAS = 20

TRUNK_DIST_CAP_M = 50_000.0
FACILITY_DIST_CAP_M = 2000.0
DENSITY_RADIUS_M = 500.0


class GraphBuildError(ValueError):
    """Base class for graph construction failures."""


class EmptyNetwork(GraphBuildError):
    """No street nodes could be built from the input."""


class NoStreetsAvailable(GraphBuildError):
    """An operation that needs street nodes found none."""


class NodeKind(str, Enum):
    BRIDGE = "bridge"
    STREET = "street"
    BUILDING = "building"


class BuildingCategory(str, Enum):
    SHOP = "shop"
    HOSPITAL = "hospital"
    RESIDENCE = "residence"


class RelationKind(str, Enum):
    STREET_TO_STREET = "street_to_street"
    STREET_TO_BRIDGE = "street_to_bridge"
    TO_SHOP = "to_shop"
    TO_HOSPITAL = "to_hospital"
    TO_RESIDENCE = "to_residence"


CATEGORY_RELATION = {
    BuildingCategory.SHOP: RelationKind.TO_SHOP,
    BuildingCategory.HOSPITAL: RelationKind.TO_HOSPITAL,
    BuildingCategory.RESIDENCE: RelationKind.TO_RESIDENCE,
}


@dataclass(frozen=True)
class PropertyKeys:
    """GeoJSON property names; defaults mirror common OpenStreetMap tags."""

    highway: str = "highway"
    trunk_value: str = "trunk"
    name: str = "name"
    span: str = "span_length"
    year: str = "year_built"
    amenity: str = "amenity"
    hospital_value: str = "hospital"
    shop: str = "shop"
    building: str = "building"
    residential_value: str = "residential"


@dataclass
class Node:
    id: int
    kind: NodeKind
    geo: GeoPoint
    plane: PlanePoint
    name: Optional[str] = None
    category: Optional[BuildingCategory] = None
    is_trunk: bool = False  # street nodes on a trunk-tagged way
    span_m: Optional[float] = None
    year_built: Optional[int] = None


@dataclass
class IngestReport:
    added: int = 0
    skipped_malformed: int = 0
    dropped_unnamed: int = 0
    dropped_unknown_category: int = 0
    dropped_outside_radius: int = 0
    street_edges: int = 0


class HetGraph:
    """Mutable heterogeneous graph with stable, insertion-ordered node ids."""

    def __init__(self, projection: TransverseMercator = ZONE9_SPHERE) -> None:
        self.projection = projection
        self.nodes: list[Node] = []
        self.edges: dict[RelationKind, list[tuple[int, int]]] = {r: [] for r in RelationKind}
        self.highway_counts: dict[int, int] = {}
        self._street_key_to_id: dict[tuple[float, float], int] = {}
        self._street_edge_set: set[tuple[int, int]] = set()

    # -- construction ---------------------------------------------------------

    def add_node(self, kind: NodeKind, geo: GeoPoint, **attrs) -> Node:
        node = Node(id=len(self.nodes), kind=kind, geo=geo, plane=self.projection.project(geo), **attrs)
        self.nodes.append(node)
        return node

    def add_street_edge(self, a: int, b: int) -> bool:
        if a == b:
            return False
        key = (a, b) if a < b else (b, a)
        if key in self._street_edge_set:
            return False
        self._street_edge_set.add(key)
        self.edges[RelationKind.STREET_TO_STREET].append(key)
        return True

    # -- views ------------------------------------------------------------------

    def ids_of(self, kind: NodeKind) -> list[int]:
        return [n.id for n in self.nodes if n.kind == kind]

    def bridge_ids(self) -> list[int]:
        return self.ids_of(NodeKind.BRIDGE)

    def counts(self) -> dict[str, int]:
        out = {k.value: 0 for k in NodeKind}
        for n in self.nodes:
            out[n.kind.value] += 1
        return out

    def street_adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n.id: [] for n in self.nodes if n.kind == NodeKind.STREET}
        for a, b in self.edges[RelationKind.STREET_TO_STREET]:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def plane_xy(self, ids=None) -> np.ndarray:
        nodes = self.nodes if ids is None else [self.nodes[i] for i in ids]
        return np.array([[n.plane.x, n.plane.y] for n in nodes], dtype=float).reshape(len(nodes), 2)

    def snapped_street(self, bridge_id: int) -> Optional[int]:
        for s, b in self.edges[RelationKind.STREET_TO_BRIDGE]:
            if b == bridge_id:
                return s
        return None

    # -- serialisation ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "lat": n.geo.lat,
                    "lon": n.geo.lon,
                    "name": n.name,
                    "category": n.category.value if n.category else None,
                    "is_trunk": n.is_trunk,
                    "span_m": n.span_m,
                    "year_built": n.year_built,
                }
                for n in self.nodes
            ],
            "edges": {r.value: [list(e) for e in self.edges[r]] for r in RelationKind},
            "highway_counts": {str(k): v for k, v in self.highway_counts.items()},
        }

    @classmethod
    def from_dict(cls, data: dict, projection: TransverseMercator = ZONE9_SPHERE) -> "HetGraph":
        g = cls(projection=projection)
        for row in data["nodes"]:
            node = g.add_node(
                NodeKind(row["kind"]),
                GeoPoint(row["lat"], row["lon"]),
                name=row.get("name"),
                category=BuildingCategory(row["category"]) if row.get("category") else None,
                is_trunk=bool(row.get("is_trunk", False)),
                span_m=row.get("span_m"),
                year_built=row.get("year_built"),
            )
            assert node.id == row["id"], "node ids must be dense and ordered"
        for rel in RelationKind:
            for a, b in data["edges"].get(rel.value, []):
                if rel == RelationKind.STREET_TO_STREET:
                    g.add_street_edge(int(a), int(b))
                else:
                    g.edges[rel].append((int(a), int(b)))
        g.highway_counts = {int(k): int(v) for k, v in data.get("highway_counts", {}).items()}
        return g


# --- GeoJSON helpers ----------------------------------------------------------


def load_feature_collection(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise GraphBuildError(f"{path}: not a GeoJSON FeatureCollection")
    return data


def _features(fc: dict) -> list:
    feats = fc.get("features")
    if not isinstance(feats, list):
        raise GraphBuildError("FeatureCollection without a features list")
    return feats


def _coord_ok(c) -> bool:
    return (
        isinstance(c, (list, tuple))
        and len(c) >= 2
        and all(isinstance(v, (int, float)) and math.isfinite(v) for v in c[:2])
    )


def _line_parts(geom: dict) -> Optional[list[list]]:
    """LineString/MultiLineString coordinate parts, or None when malformed."""
    if not isinstance(geom, dict):
        return None
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    if gtype == "LineString":
        parts = [coords]
    elif gtype == "MultiLineString":
        parts = coords
    else:
        return None
    if not isinstance(parts, list):
        return None
    cleaned = []
    for part in parts:
        if not isinstance(part, list) or len(part) < 2 or not all(_coord_ok(c) for c in part):
            return None
        cleaned.append(part)
    return cleaned


def _ring_centroid(ring: list) -> tuple[float, float]:
    """Shoelace centroid of a polygon ring (lon, lat); vertex mean if degenerate."""
    pts = ring[:-1] if len(ring) > 1 and ring[0][:2] == ring[-1][:2] else ring
    area2 = 0.0
    cx = cy = 0.0
    for (x1, y1), (x2, y2) in zip(
        [(c[0], c[1]) for c in pts],
        [(c[0], c[1]) for c in pts[1:] + pts[:1]],
    ):
        cross = x1 * y2 - x2 * y1
        area2 += cross
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    if abs(area2) < 1e-14:
        xs = [c[0] for c in pts]
        ys = [c[1] for c in pts]
        return sum(xs) / len(xs), sum(ys) / len(ys)
    return cx / (3.0 * area2), cy / (3.0 * area2)


def _point_of_geometry(geom: dict) -> Optional[tuple[float, float]]:
    """Representative (lon, lat) of a Point/Polygon/LineString geometry."""
    if not isinstance(geom, dict):
        return None
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    try:
        if gtype == "Point":
            if not _coord_ok(coords):
                return None
            return float(coords[0]), float(coords[1])
        if gtype == "Polygon":
            ring = coords[0]
            if not isinstance(ring, list) or len(ring) < 3 or not all(_coord_ok(c) for c in ring):
                return None
            return _ring_centroid(ring)
        if gtype == "MultiPolygon":
            ring = coords[0][0]
            if not isinstance(ring, list) or len(ring) < 3 or not all(_coord_ok(c) for c in ring):
                return None
            return _ring_centroid(ring)
        if gtype in ("LineString", "MultiLineString"):
            parts = _line_parts(geom)
            if parts is None:
                return None
            xs = [c[0] for part in parts for c in part]
            ys = [c[1] for part in parts for c in part]
            return sum(xs) / len(xs), sum(ys) / len(ys)
    except (TypeError, IndexError):
        return None
    return None


# --- ingestion ------------------------------------------------------------------


def ingest_streets(graph: HetGraph, fc: dict, keys: PropertyKeys = PropertyKeys()) -> IngestReport:
    """Add street junction nodes and street_to_street edges from line features.

    Junctions are deduplicated on coordinates rounded to 1e-7 degrees, so
    shared endpoints become shared nodes.  Malformed features are skipped
    and counted.  Raises EmptyNetwork when no street node results.
    """
    report = IngestReport()
    for feat in _features(fc):
        if not isinstance(feat, dict):
            report.skipped_malformed += 1
            continue
        parts = _line_parts(feat.get("geometry"))
        if parts is None:
            report.skipped_malformed += 1
            continue
        props = feat.get("properties") or {}
        is_trunk = props.get(keys.highway) == keys.trunk_value
        for part in parts:
            prev_id = None
            for lon, lat in ((c[0], c[1]) for c in part):
                key = (round(lat, COORD_DECIMALS), round(lon, COORD_DECIMALS))
                node_id = graph._street_key_to_id.get(key)
                if node_id is None:
                    node = graph.add_node(NodeKind.STREET, GeoPoint(lat, lon), is_trunk=is_trunk)
                    node_id = node.id
                    graph._street_key_to_id[key] = node_id
                    report.added += 1
                elif is_trunk:
                    graph.nodes[node_id].is_trunk = True
                if prev_id is not None and prev_id != node_id:
                    if graph.add_street_edge(prev_id, node_id):
                        report.street_edges += 1
                prev_id = node_id
    if not any(n.kind == NodeKind.STREET for n in graph.nodes):
        raise EmptyNetwork("no street nodes could be built from the input")
    return report


def _parse_float(value) -> Optional[float]:
    try:
        out = float(value)
    except (TypeError, ValueError):
        return None
    return out if math.isfinite(out) else None


def ingest_bridges(graph: HetGraph, fc: dict, keys: PropertyKeys = PropertyKeys()) -> IngestReport:
    """Add one bridge node per named feature; unnamed features are dropped.

    Point features use their coordinate, polygons their shoelace centroid,
    lines their vertex mean.  Optional span and construction-year properties
    are parsed permissively.
    """
    report = IngestReport()
    for feat in _features(fc):
        if not isinstance(feat, dict):
            report.skipped_malformed += 1
            continue
        point = _point_of_geometry(feat.get("geometry"))
        if point is None:
            report.skipped_malformed += 1
            continue
        props = feat.get("properties") or {}
        name = props.get(keys.name)
        if not isinstance(name, str) or not name.strip():
            report.dropped_unnamed += 1
            continue
        span = _parse_float(props.get(keys.span))
        year_f = _parse_float(props.get(keys.year))
        graph.add_node(
            NodeKind.BRIDGE,
            GeoPoint(point[1], point[0]),
            name=name.strip(),
            span_m=span,
            year_built=int(year_f) if year_f is not None else None,
        )
        report.added += 1
    return report


def _categorise(props: dict, keys: PropertyKeys) -> Optional[BuildingCategory]:
    if props.get(keys.amenity) == keys.hospital_value:
        return BuildingCategory.HOSPITAL
    shop = props.get(keys.shop)
    if isinstance(shop, str) and shop.strip():
        return BuildingCategory.SHOP
    if props.get(keys.building) == keys.residential_value:
        return BuildingCategory.RESIDENCE
    return None


def ingest_buildings(
    graph: HetGraph,
    fc: dict,
    keys: PropertyKeys = PropertyKeys(),
    radius_m: float = DEFAULT_RADIUS_M,
) -> IngestReport:
    """Add categorised building nodes within radius_m of at least one bridge.

    Category precedence is hospital, then shop, then residence.  Buildings
    with no recognised category, and buildings farther than radius_m
    (great-circle) from every bridge, are dropped and counted.
    """
    report = IngestReport()
    bridges = [graph.nodes[i] for i in graph.bridge_ids()]
    for feat in _features(fc):
        if not isinstance(feat, dict):
            report.skipped_malformed += 1
            continue
        point = _point_of_geometry(feat.get("geometry"))
        if point is None:
            report.skipped_malformed += 1
            continue
        category = _categorise(feat.get("properties") or {}, keys)
        if category is None:
            report.dropped_unknown_category += 1
            continue
        geo = GeoPoint(point[1], point[0])
        if not any(haversine_m(geo, b.geo) <= radius_m for b in bridges):
            report.dropped_outside_radius += 1
            continue
        graph.add_node(NodeKind.BUILDING, geo, category=category)
        report.added += 1
    return report


# --- topology -------------------------------------------------------------------


def snap_bridges(graph: HetGraph) -> int:
    """Connect every bridge to its nearest street junction (planar distance).

    Exact ties break toward the lowest street node id.  Replaces any
    existing street_to_bridge edges.  Raises NoStreetsAvailable when the
    graph has no street nodes.
    """
    street_ids = graph.ids_of(NodeKind.STREET)
    if not street_ids:
        raise NoStreetsAvailable("cannot snap bridges without street nodes")
    bridge_ids = graph.bridge_ids()
    graph.edges[RelationKind.STREET_TO_BRIDGE] = []
    if not bridge_ids:
        return 0
    tree = cKDTree(graph.plane_xy(street_ids))
    street_ids_arr = np.asarray(street_ids)
    for bid in bridge_ids:
        p = graph.nodes[bid].plane
        d0, _ = tree.query([p.x, p.y])
        near = tree.query_ball_point([p.x, p.y], d0 + 1e-9)
        chosen = int(street_ids_arr[near].min())
        graph.edges[RelationKind.STREET_TO_BRIDGE].append((chosen, bid))
    return len(bridge_ids)


def compute_knn_edges(
    graph: HetGraph,
    k_shop: int = 5,
    k_hospital: int = 5,
    k_residence: int = 20,
    radius_m: float = DEFAULT_RADIUS_M,
) -> dict[RelationKind, list[tuple[int, int]]]:
    """Pure k-nearest building edge computation; does not mutate the graph.

    For each bridge and category, candidate buildings within radius_m
    (great-circle) are ranked by planar distance with ties broken toward
    the lowest building id, and the first k become (bridge, building)
    edges.
    """
    for name, k in (("k_shop", k_shop), ("k_hospital", k_hospital), ("k_residence", k_residence)):
        if not isinstance(k, int) or k < 1:
            raise GraphBuildError(f"{name} must be a positive integer, got {k!r}")
    out: dict[RelationKind, list[tuple[int, int]]] = {
        RelationKind.TO_SHOP: [],
        RelationKind.TO_HOSPITAL: [],
        RelationKind.TO_RESIDENCE: [],
    }
    k_of = {
        BuildingCategory.SHOP: k_shop,
        BuildingCategory.HOSPITAL: k_hospital,
        BuildingCategory.RESIDENCE: k_residence,
    }
    bridge_ids = graph.bridge_ids()
    if not bridge_ids:
        return out
    by_cat: dict[BuildingCategory, list[Node]] = {c: [] for c in BuildingCategory}
    for n in graph.nodes:
        if n.kind == NodeKind.BUILDING and n.category is not None:
            by_cat[n.category].append(n)
    for category, members in by_cat.items():
        if not members:
            continue
        rel = CATEGORY_RELATION[category]
        xy = np.array([[m.plane.x, m.plane.y] for m in members])
        tree = cKDTree(xy)
        # Planar prefilter slightly wider than the great-circle bound.
        prefilter = radius_m * 1.01 + 50.0
        for bid in bridge_ids:
            bnode = graph.nodes[bid]
            candidates = tree.query_ball_point([bnode.plane.x, bnode.plane.y], prefilter)
            ranked = []
            for ci in candidates:
                m = members[ci]
                if haversine_m(bnode.geo, m.geo) > radius_m:
                    continue
                planar = math.hypot(m.plane.x - bnode.plane.x, m.plane.y - bnode.plane.y)
                ranked.append((planar, m.id))
            ranked.sort()
            out[rel].extend((bid, nid) for _, nid in ranked[: k_of[category]])
    return out


def knn_building_edges(
    graph: HetGraph,
    k_shop: int = 5,
    k_hospital: int = 5,
    k_residence: int = 20,
    radius_m: float = DEFAULT_RADIUS_M,
) -> dict[str, int]:
    """Compute and install bridge-to-building edges; returns per-relation counts."""
    edges = compute_knn_edges(graph, k_shop, k_hospital, k_residence, radius_m)
    for rel, pairs in edges.items():
        graph.edges[rel] = pairs
    return {rel.value: len(pairs) for rel, pairs in edges.items()}


def betweenness(graph: HetGraph) -> np.ndarray:
    """Brandes betweenness of street junctions, normalised per component.

    Unweighted shortest paths over street_to_street edges.  Each node's
    accumulated dependency is halved (undirected double counting) and divided
    by (m - 1)(m - 2) / 2 for its component size m; components smaller than
    three nodes score zero.  Non-street nodes score zero.
    """
    n = len(graph.nodes)
    scores = np.zeros(n, dtype=float)
    adj = graph.street_adjacency()
    street_ids = list(adj.keys())
    if not street_ids:
        return scores

    comp_of: dict[int, int] = {}
    comp_sizes: list[int] = []
    for start in street_ids:
        if start in comp_of:
            continue
        cid = len(comp_sizes)
        queue = deque([start])
        comp_of[start] = cid
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for v in adj[u]:
                if v not in comp_of:
                    comp_of[v] = cid
                    queue.append(v)
        comp_sizes.append(size)

    raw: dict[int, float] = {v: 0.0 for v in street_ids}
    for s in street_ids:
        sigma = {v: 0 for v in adj}
        dist = {v: -1 for v in adj}
        preds: dict[int, list[int]] = {v: [] for v in adj}
        sigma[s], dist[s] = 1, 0
        order = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = {v: 0.0 for v in adj}
        for w in reversed(order):
            for u in preds[w]:
                delta[u] += (sigma[u] / sigma[w]) * (1.0 + delta[w])
            if w != s:
                raw[w] += delta[w]

    for v in street_ids:
        m = comp_sizes[comp_of[v]]
        pairs = (m - 1) * (m - 2) / 2.0
        scores[v] = (raw[v] / 2.0) / pairs if pairs > 0 else 0.0
    return scores


def _street_edge_lengths(graph: HetGraph) -> dict[int, list[tuple[int, float]]]:
    adj: dict[int, list[tuple[int, float]]] = {
        n.id: [] for n in graph.nodes if n.kind == NodeKind.STREET
    }
    for a, b in graph.edges[RelationKind.STREET_TO_STREET]:
        pa, pb = graph.nodes[a].plane, graph.nodes[b].plane
        w = math.hypot(pa.x - pb.x, pa.y - pb.y)
        adj[a].append((b, w))
        adj[b].append((a, w))
    return adj


def _dijkstra(adj: dict[int, list[tuple[int, float]]], sources: list[int], cutoff: float) -> dict[int, float]:
    dist: dict[int, float] = {}
    heap = [(0.0, s) for s in sources]
    heapq.heapify(heap)
    for s in sources:
        dist[s] = 0.0
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd <= cutoff and nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def highway_metapath_counts(graph: HetGraph, radius_m: float = DEFAULT_RADIUS_M) -> dict[int, int]:
    """Trunk junctions within radius_m network distance of each bridge.

    Distance is measured along street edges (planar lengths) from the
    bridge's snapped junction, which itself counts when trunk-tagged.
    Results are cached on the graph.  Bridges must be snapped first.
    """
    adj = _street_edge_lengths(graph)
    snapped = {b: s for s, b in graph.edges[RelationKind.STREET_TO_BRIDGE]}
    counts: dict[int, int] = {}
    for bid in graph.bridge_ids():
        start = snapped.get(bid)
        if start is None:
            raise GraphBuildError(f"bridge {bid} is not snapped to a street")
        dist = _dijkstra(adj, [start], radius_m)
        counts[bid] = sum(1 for v in dist if graph.nodes[v].is_trunk)
    graph.highway_counts = counts
    return counts


def nearest_trunk_distances(graph: HetGraph, cap_m: float = TRUNK_DIST_CAP_M) -> dict[int, float]:
    """Network distance from every street junction to the nearest trunk junction."""
    adj = _street_edge_lengths(graph)
    trunk = [n.id for n in graph.nodes if n.kind == NodeKind.STREET and n.is_trunk]
    if not trunk:
        return {v: cap_m for v in adj}
    dist = _dijkstra(adj, trunk, cap_m)
    return {v: min(dist.get(v, cap_m), cap_m) for v in adj}


def build_features(graph: HetGraph) -> np.ndarray:
    """Assemble the (n_nodes, 21) feature matrix.

    Bridges must be snapped and building edges installed first; trunk
    reachability counts are computed (and cached) if missing.  All columns
    are finite; counts and distances are log1p-compressed; the kind one-hot
    occupies columns 9 to 11 and column 20 is a constant bias.
    """
    n = len(graph.nodes)
    X = np.zeros((n, FEATURE_DIM), dtype=float)
    if n == 0:
        return X

    if graph.bridge_ids() and not graph.highway_counts:
        highway_metapath_counts(graph)

    degree = np.zeros(n, dtype=float)
    for rel in RelationKind:
        for a, b in graph.edges[rel]:
            degree[a] += 1.0
            degree[b] += 1.0
    X[:, F_DEGREE] = degree / max(n - 1, 1)

    X[:, F_BETWEENNESS] = betweenness(graph)

    out_counts = {
        RelationKind.TO_SHOP: F_SHOP_EDGES,
        RelationKind.TO_HOSPITAL: F_HOSPITAL_EDGES,
        RelationKind.TO_RESIDENCE: F_RESIDENCE_EDGES,
    }
    for rel, col in out_counts.items():
        per = np.zeros(n)
        for a, _ in graph.edges[rel]:
            per[a] += 1.0
        X[:, col] = np.log1p(per)

    xy = graph.plane_xy()
    mins, maxs = xy.min(axis=0), xy.max(axis=0)
    spans = np.where(maxs - mins > 0, maxs - mins, 1.0)
    X[:, F_PLANE_X] = (xy[:, 0] - mins[0]) / spans[0]
    X[:, F_PLANE_Y] = (xy[:, 1] - mins[1]) / spans[1]

    street_ids = graph.ids_of(NodeKind.STREET)
    trunk_dist = nearest_trunk_distances(graph) if street_ids else {}
    snapped = {b: s for s, b in graph.edges[RelationKind.STREET_TO_BRIDGE]}

    if street_ids:
        street_tree = cKDTree(graph.plane_xy(street_ids))
        density = street_tree.query_ball_point(xy, DENSITY_RADIUS_M, return_length=True)
        X[:, F_STREET_DENSITY] = np.log1p(np.asarray(density, dtype=float))

    buildings_by_cat: dict[BuildingCategory, list[Node]] = {c: [] for c in BuildingCategory}
    building_nodes = [nd for nd in graph.nodes if nd.kind == NodeKind.BUILDING]
    for nd in building_nodes:
        if nd.category is not None:
            buildings_by_cat[nd.category].append(nd)
    cat_trees = {
        c: cKDTree(np.array([[m.plane.x, m.plane.y] for m in mem]))
        for c, mem in buildings_by_cat.items()
        if mem
    }
    building_tree = (
        cKDTree(np.array([[m.plane.x, m.plane.y] for m in building_nodes])) if building_nodes else None
    )
    cat_cols = {
        BuildingCategory.SHOP: F_SHOP_DIST,
        BuildingCategory.HOSPITAL: F_HOSPITAL_DIST,
        BuildingCategory.RESIDENCE: F_RESIDENCE_DIST,
    }

    for node in graph.nodes:
        i = node.id
        X[i, F_BIAS] = 1.0
        if node.kind == NodeKind.BRIDGE:
            X[i, F_ONEHOT_BRIDGE] = 1.0
            X[i, F_SPAN] = node.span_m or 0.0
            if node.year_built is not None:
                X[i, F_YEAR] = max(0.0, (node.year_built - 1900) / 150.0)
            hw = graph.highway_counts.get(i, 0)
            X[i, F_HIGHWAY_COUNT] = math.log1p(hw)
            X[i, F_IS_HIGHWAY] = 1.0 if hw > 0 else 0.0
            s = snapped.get(i)
            if s is not None:
                X[i, F_TRUNK_DIST] = math.log1p(trunk_dist.get(s, TRUNK_DIST_CAP_M))
            for cat, col in cat_cols.items():
                tree = cat_trees.get(cat)
                if tree is None:
                    X[i, col] = math.log1p(FACILITY_DIST_CAP_M)
                else:
                    d, _ = tree.query([node.plane.x, node.plane.y])
                    X[i, col] = math.log1p(min(float(d), FACILITY_DIST_CAP_M))
            if building_tree is not None:
                prefilter = DEFAULT_RADIUS_M * 1.01 + 50.0
                cnt = 0
                for ci in building_tree.query_ball_point([node.plane.x, node.plane.y], prefilter):
                    if haversine_m(node.geo, building_nodes[ci].geo) <= DEFAULT_RADIUS_M:
                        cnt += 1
                X[i, F_BUILDING_COUNT] = math.log1p(cnt)
        elif node.kind == NodeKind.STREET:
            X[i, F_ONEHOT_STREET] = 1.0
            X[i, F_IS_HIGHWAY] = 1.0 if node.is_trunk else 0.0
            X[i, F_TRUNK_DIST] = math.log1p(trunk_dist.get(i, TRUNK_DIST_CAP_M))
        else:
            X[i, F_ONEHOT_BUILDING] = 1.0

    if not np.isfinite(X).all():
        raise GraphBuildError("feature matrix contains non-finite values")
    return X
