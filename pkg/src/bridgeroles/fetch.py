"""Download road, bridge, and building data from an Overpass endpoint.

Builds Overpass QL queries for a bounding box, posts them, and converts
the JSON reply into the GeoJSON feature collections the ingest stage
reads.  Conversion is pure, so it is testable on canned payloads; only
``overpass_fetch`` touches the network.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "FetchError",
    "BBox",
    "streets_query",
    "bridges_query",
    "buildings_query",
    "overpass_fetch",
    "overpass_to_geojson",
    "fetch_city",
    "DEFAULT_ENDPOINT",
]

DEFAULT_ENDPOINT = "https://overpass-api.de/api/interpreter"
DEFAULT_TIMEOUT_S = 180.0
USER_AGENT = "bridgeroles/1.0 (bridge preparedness survey)"


class FetchError(RuntimeError):
    """Download or payload conversion failed."""


@dataclass(frozen=True)
class BBox:
    """Geographic bounding box in degrees, Overpass order (S, W, N, E)."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self):
        if not (-90.0 <= self.south < self.north <= 90.0):
            raise FetchError("latitude order must be -90 <= south < north <= 90")
        if not (-180.0 <= self.west < self.east <= 180.0):
            raise FetchError("longitude order must be -180 <= west < east <= 180")

    def as_ql(self) -> str:
        return "%s,%s,%s,%s" % (self.south, self.west, self.north, self.east)


def _wrap(bbox: BBox, body: str, out: str) -> str:
    return (
        "[out:json][timeout:%d];\n(\n%s);\nout %s;\n"
        % (int(DEFAULT_TIMEOUT_S), body.format(bb=bbox.as_ql()), out)
    )


def streets_query(bbox: BBox) -> str:
    """Every named road way; geometry included for junction extraction."""
    return _wrap(bbox, '  way["highway"]["name"]({bb});\n', "geom")


def bridges_query(bbox: BBox) -> str:
    """Named bridge structures, reduced to center points."""
    body = (
        '  way["man_made"="bridge"]["name"]({bb});\n'
        '  relation["man_made"="bridge"]["name"]({bb});\n'
        '  way["bridge"="yes"]["name"]({bb});\n'
    )
    return _wrap(bbox, body, "center")


def buildings_query(bbox: BBox) -> str:
    """Shops, hospitals, and residential buildings as center points."""
    body = (
        '  node["shop"]({bb});\n'
        '  way["shop"]({bb});\n'
        '  node["amenity"="hospital"]({bb});\n'
        '  way["amenity"="hospital"]({bb});\n'
        '  node["building"="residential"]({bb});\n'
        '  way["building"="residential"]({bb});\n'
    )
    return _wrap(bbox, body, "center")


def overpass_fetch(query: str, endpoint: str = DEFAULT_ENDPOINT,
                   timeout: float = DEFAULT_TIMEOUT_S) -> dict:
    """POST one query and return the parsed Overpass JSON document."""
    data = urllib.parse.urlencode({"data": query}).encode()
    request = urllib.request.Request(
        endpoint, data=data, headers={"User-Agent": USER_AGENT})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            raw = response.read()
    except urllib.error.HTTPError as exc:
        raise FetchError("endpoint returned HTTP %d: %s" % (exc.code, exc.reason)) from exc
    except urllib.error.URLError as exc:
        raise FetchError("cannot reach %s: %s" % (endpoint, exc.reason)) from exc
    except OSError as exc:
        raise FetchError("network failure: %s" % exc) from exc
    try:
        payload = json.loads(raw.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FetchError("endpoint reply is not valid JSON: %s" % exc) from exc
    if not isinstance(payload, dict) or "elements" not in payload:
        raise FetchError("endpoint reply carries no elements array")
    return payload


def _element_geometry(element: dict):
    kind = element.get("type")
    if kind == "node":
        lat, lon = element.get("lat"), element.get("lon")
        if lat is None or lon is None:
            return None
        return {"type": "Point", "coordinates": [lon, lat]}
    center = element.get("center")
    if center is not None:
        return {"type": "Point", "coordinates": [center["lon"], center["lat"]]}
    shape = element.get("geometry")
    if isinstance(shape, list) and len(shape) >= 2:
        coords = [[pt["lon"], pt["lat"]] for pt in shape]
        if len(coords) >= 4 and coords[0] == coords[-1]:
            return {"type": "Polygon", "coordinates": [coords]}
        return {"type": "LineString", "coordinates": coords}
    return None


def overpass_to_geojson(payload: dict) -> dict:
    """Convert an Overpass JSON document to a GeoJSON FeatureCollection.

    Nodes become Points, ways with a center become Points, ways with full
    geometry become LineStrings (closed rings become Polygons).  Elements
    without usable geometry are dropped.  OSM tags map directly onto
    feature properties, plus osm_id and osm_type for traceability.
    """
    if not isinstance(payload, dict) or not isinstance(payload.get("elements"), list):
        raise FetchError("payload carries no elements array")
    features = []
    for element in payload["elements"]:
        geometry = _element_geometry(element)
        if geometry is None:
            continue
        properties = dict(element.get("tags") or {})
        properties["osm_id"] = element.get("id")
        properties["osm_type"] = element.get("type")
        features.append({
            "type": "Feature",
            "geometry": geometry,
            "properties": properties,
        })
    return {"type": "FeatureCollection", "features": features}


def fetch_city(bbox: BBox, out_dir, endpoint: str = DEFAULT_ENDPOINT,
               timeout: float = DEFAULT_TIMEOUT_S) -> dict[str, Path]:
    """Download all three layers and write them as GeoJSON files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    queries = {
        "streets": streets_query(bbox),
        "bridges": bridges_query(bbox),
        "buildings": buildings_query(bbox),
    }
    paths = {}
    for name, query in queries.items():
        collection = overpass_to_geojson(overpass_fetch(query, endpoint, timeout))
        path = out / ("%s.geojson" % name)
        path.write_text(json.dumps(collection))
        paths[name] = path
    return paths
