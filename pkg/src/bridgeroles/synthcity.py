"""Deterministic synthetic city fixtures.

Builds a small riverside city as three GeoJSON collections (streets,
bridges, buildings) with a planned classification outcome per bridge:
a trunk corridor along the north bank, bridge columns every 4 km, and a
scripted building cluster near each bridge cycling through supply,
medical, residential, and mixed makeups. Two bridges sit in a detached
street component far to the southwest with no trunk access at all, so
highway gating and the Balanced category get exercised too.

Everything is generated from closed-form arithmetic: no randomness, so
fixtures are stable across runs and platforms.
"""

from __future__ import annotations

import math
from pathlib import Path

from .geo import PlanePoint, unproject

__all__ = ["synth_city", "write_city"]

BRIDGE_SPACING_M = 4000.0
TRUNK_STEP_M = 500.0
ROW_NORTH_M = 250.0
ROW_NORTH_OUTER_M = 750.0
ROW_SOUTH_M = -250.0
ROW_SOUTH_OUTER_M = -750.0
CLUSTER_NORTH_M = 450.0
CLUSTER_RADIUS_M = 60.0

# detached component anchor, far beyond the 2 km building radius
ISOLATED_X = -9000.0
ISOLATED_Y = -9000.0

# building makeup per bridge, cycling on the bridge index:
# (shops, hospitals, residences)
_MAKEUPS = {
    0: (9, 0, 0),    # supply cluster
    1: (1, 4, 0),    # medical cluster
    2: (2, 1, 12),   # residential cluster
    3: (4, 3, 3),    # mixed, shops dominant
    7: (3, 3, 4),    # mixed, residences dominant
}


def _lonlat(x: float, y: float) -> list[float]:
    p = unproject(PlanePoint(x, y))
    return [round(p.lon, 7), round(p.lat, 7)]


def _line(name: str, coords: list[list[float]], **props) -> dict:
    properties = {"name": name}
    properties.update(props)
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": coords},
        "properties": properties,
    }


def _point(x: float, y: float, props: dict) -> dict:
    return {
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": _lonlat(x, y)},
        "properties": props,
    }


def _collection(features: list[dict]) -> dict:
    return {"type": "FeatureCollection", "features": features}


def _makeup_for(index: int) -> tuple[int, int, int]:
    if index % 8 == 7:
        return _MAKEUPS[7]
    return _MAKEUPS[index % 4]


def _cluster_buildings(bridge_index: int, cx: float, cy: float) -> list[dict]:
    shops, hospitals, residences = _makeup_for(bridge_index)
    plan = (
        [("shop", j) for j in range(shops)]
        + [("hospital", j) for j in range(hospitals)]
        + [("residence", j) for j in range(residences)]
    )
    feats = []
    for slot, (kind, j) in enumerate(plan):
        angle = 2.0 * math.pi * slot / len(plan)
        radius = CLUSTER_RADIUS_M + 25.0 * (slot % 3)
        x = cx + radius * math.cos(angle)
        y = cy + radius * math.sin(angle)
        if kind == "shop":
            props = {"shop": "convenience", "name": "Shop %d-%d" % (bridge_index, j)}
        elif kind == "hospital":
            props = {"amenity": "hospital", "name": "Clinic %d-%d" % (bridge_index, j)}
        else:
            props = {"building": "residential"}
        feats.append(_point(x, y, props))
    return feats


def synth_city(n_bridges: int = 30) -> dict[str, dict]:
    """Generate {"streets", "bridges", "buildings"} feature collections.

    ``n_bridges`` counts every bridge in the city. Cities of six bridges
    or more reserve two of them for the detached southwest component.
    """
    if not (isinstance(n_bridges, int) and n_bridges >= 2):
        raise ValueError("n_bridges must be an integer >= 2")
    n_isolated = 2 if n_bridges >= 6 else 0
    n_main = n_bridges - n_isolated

    streets: list[dict] = []
    bridges: list[dict] = []
    buildings: list[dict] = []

    width = max((n_main - 1) * BRIDGE_SPACING_M, TRUNK_STEP_M)

    # trunk corridor along the north bank, one node every 500 m
    steps = int(round(width / TRUNK_STEP_M))
    for j in range(steps):
        x0, x1 = j * TRUNK_STEP_M, (j + 1) * TRUNK_STEP_M
        streets.append(_line(
            "Coastal Trunk Road",
            [_lonlat(x0, ROW_NORTH_M), _lonlat(x1, ROW_NORTH_M)],
            highway="trunk",
        ))

    # plain rows north and south of the river
    for i in range(n_main - 1):
        x0, x1 = i * BRIDGE_SPACING_M, (i + 1) * BRIDGE_SPACING_M
        streets.append(_line(
            "Upper North Avenue",
            [_lonlat(x0, ROW_NORTH_OUTER_M), _lonlat(x1, ROW_NORTH_OUTER_M)]))
        streets.append(_line(
            "South Avenue",
            [_lonlat(x0, ROW_SOUTH_M), _lonlat(x1, ROW_SOUTH_M)]))
        streets.append(_line(
            "Outer South Avenue",
            [_lonlat(x0, ROW_SOUTH_OUTER_M), _lonlat(x1, ROW_SOUTH_OUTER_M)]))

    for i in range(n_main):
        x = i * BRIDGE_SPACING_M
        streets.append(_line(
            "Column Street %d" % i,
            [_lonlat(x, ROW_SOUTH_OUTER_M), _lonlat(x, ROW_SOUTH_M)]))
        streets.append(_line(
            "Crossing Street %d" % i,
            [_lonlat(x, ROW_SOUTH_M), _lonlat(x, ROW_NORTH_M)]))
        streets.append(_line(
            "Column Street %d North" % i,
            [_lonlat(x, ROW_NORTH_M), _lonlat(x, ROW_NORTH_OUTER_M)]))

        bridges.append(_point(x, 0.0, {
            "name": "River Bridge %02d" % i,
            "span_length": 40.0 + float((i * 17) % 160),
            "year_built": 1930 + (i * 13) % 90,
        }))
        buildings.extend(_cluster_buildings(i, x, CLUSTER_NORTH_M))

    if n_isolated:
        ix, iy = ISOLATED_X, ISOLATED_Y
        streets.append(_line("Creek Road West", [_lonlat(ix - 500, iy), _lonlat(ix, iy)]))
        streets.append(_line("Creek Road East", [_lonlat(ix, iy), _lonlat(ix + 500, iy)]))
        streets.append(_line("Creek Road North", [_lonlat(ix, iy), _lonlat(ix, iy + 500)]))
        streets.append(_line("Creek Road South", [_lonlat(ix, iy), _lonlat(ix, iy - 500)]))
        bridges.append(_point(ix, iy + 250.0, {
            "name": "North Creek Bridge",
            "span_length": 22.0,
            "year_built": 1968,
        }))
        bridges.append(_point(ix - 250.0, iy, {
            "name": "West Creek Bridge",
            "span_length": 18.0,
            "year_built": 1975,
        }))
        for j in range(5):
            angle = 2.0 * math.pi * j / 5.0
            buildings.append(_point(
                ix + 80.0 * math.cos(angle),
                iy + 600.0 + 80.0 * math.sin(angle),
                {"building": "residential"},
            ))

    return {
        "streets": _collection(streets),
        "bridges": _collection(bridges),
        "buildings": _collection(buildings),
    }


def write_city(out_dir, n_bridges: int = 30) -> dict[str, Path]:
    """Write the three collections as GeoJSON files; returns their paths."""
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    city = synth_city(n_bridges)
    paths = {}
    for kind, fc in city.items():
        path = out / ("%s.geojson" % kind)
        path.write_text(json.dumps(fc))
        paths[kind] = path
    return paths
