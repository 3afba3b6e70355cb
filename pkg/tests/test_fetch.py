"""Query construction and payload conversion on canned documents.

No test here touches the network: overpass_fetch is exercised through a
patched urlopen.
"""

import io
import json
import urllib.error
from unittest import mock

import pytest

from bridgeroles.fetch import (
    BBox,
    FetchError,
    bridges_query,
    buildings_query,
    fetch_city,
    overpass_fetch,
    overpass_to_geojson,
    streets_query,
)
from bridgeroles.graphbuild import HetGraph, ingest_bridges, ingest_buildings, ingest_streets


BOX = BBox(south=35.6, west=139.7, north=35.8, east=139.9)


class TestBBox:
    def test_ql_order_is_south_west_north_east(self):
        assert BOX.as_ql() == "35.6,139.7,35.8,139.9"

    @pytest.mark.parametrize("kwargs", [
        dict(south=35.8, west=139.7, north=35.6, east=139.9),   # inverted lat
        dict(south=35.6, west=139.9, north=35.8, east=139.7),   # inverted lon
        dict(south=-91.0, west=139.7, north=35.8, east=139.9),  # out of range
        dict(south=35.6, west=139.7, north=35.8, east=181.0),
    ])
    def test_rejects_bad_boxes(self, kwargs):
        with pytest.raises(FetchError):
            BBox(**kwargs)


class TestQueries:
    def test_streets_query(self):
        q = streets_query(BOX)
        assert "[out:json]" in q
        assert 'way["highway"]["name"](35.6,139.7,35.8,139.9);' in q
        assert q.rstrip().endswith("out geom;")

    def test_bridges_query(self):
        q = bridges_query(BOX)
        assert 'way["man_made"="bridge"]["name"]' in q
        assert 'relation["man_made"="bridge"]["name"]' in q
        assert 'way["bridge"="yes"]["name"]' in q
        assert q.rstrip().endswith("out center;")

    def test_buildings_query(self):
        q = buildings_query(BOX)
        for selector in ('node["shop"]', 'way["shop"]', 'node["amenity"="hospital"]',
                         'way["amenity"="hospital"]', 'node["building"="residential"]',
                         'way["building"="residential"]'):
            assert selector in q
        assert q.rstrip().endswith("out center;")


class TestConversion:
    def test_node_becomes_point(self):
        payload = {"elements": [
            {"type": "node", "id": 11, "lat": 35.7, "lon": 139.8,
             "tags": {"shop": "convenience", "name": "Store"}},
        ]}
        fc = overpass_to_geojson(payload)
        assert fc["type"] == "FeatureCollection"
        feat = fc["features"][0]
        assert feat["geometry"] == {"type": "Point", "coordinates": [139.8, 35.7]}
        assert feat["properties"]["shop"] == "convenience"
        assert feat["properties"]["osm_id"] == 11
        assert feat["properties"]["osm_type"] == "node"

    def test_way_with_center_becomes_point(self):
        payload = {"elements": [
            {"type": "way", "id": 5, "center": {"lat": 35.71, "lon": 139.81},
             "tags": {"man_made": "bridge", "name": "A Bridge"}},
        ]}
        feat = overpass_to_geojson(payload)["features"][0]
        assert feat["geometry"] == {"type": "Point", "coordinates": [139.81, 35.71]}

    def test_way_with_geometry_becomes_linestring(self):
        payload = {"elements": [
            {"type": "way", "id": 6, "tags": {"highway": "primary", "name": "Road"},
             "geometry": [{"lat": 35.70, "lon": 139.80}, {"lat": 35.71, "lon": 139.81}]},
        ]}
        feat = overpass_to_geojson(payload)["features"][0]
        assert feat["geometry"]["type"] == "LineString"
        assert feat["geometry"]["coordinates"] == [[139.80, 35.70], [139.81, 35.71]]

    def test_closed_ring_becomes_polygon(self):
        ring = [{"lat": 35.70, "lon": 139.80}, {"lat": 35.70, "lon": 139.81},
                {"lat": 35.71, "lon": 139.81}, {"lat": 35.70, "lon": 139.80}]
        payload = {"elements": [{"type": "way", "id": 7, "tags": {}, "geometry": ring}]}
        feat = overpass_to_geojson(payload)["features"][0]
        assert feat["geometry"]["type"] == "Polygon"
        assert feat["geometry"]["coordinates"][0][0] == [139.80, 35.70]
        assert feat["geometry"]["coordinates"][0][-1] == [139.80, 35.70]

    def test_geometryless_elements_dropped(self):
        payload = {"elements": [
            {"type": "relation", "id": 8, "tags": {"name": "No shape"}},
            {"type": "node", "id": 9, "tags": {}},
        ]}
        assert overpass_to_geojson(payload)["features"] == []

    def test_rejects_malformed_payload(self):
        with pytest.raises(FetchError):
            overpass_to_geojson({"nope": 1})
        with pytest.raises(FetchError):
            overpass_to_geojson({"elements": "not a list"})

    def test_converted_buildings_ingest_cleanly(self):
        payload = {"elements": [
            {"type": "node", "id": 1, "lat": 35.700, "lon": 139.800,
             "tags": {"shop": "convenience"}},
            {"type": "way", "id": 2, "center": {"lat": 35.701, "lon": 139.801},
             "tags": {"amenity": "hospital", "name": "Clinic"}},
            {"type": "node", "id": 3, "lat": 35.702, "lon": 139.802,
             "tags": {"building": "residential"}},
        ]}
        graph = HetGraph()
        streets = {"type": "FeatureCollection", "features": [{
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [[139.799, 35.699], [139.803, 35.703]]},
            "properties": {"name": "Main", "highway": "primary"},
        }]}
        bridges = {"type": "FeatureCollection", "features": [{
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [139.801, 35.701]},
            "properties": {"name": "Crossing"},
        }]}
        ingest_streets(graph, streets)
        ingest_bridges(graph, bridges)
        report = ingest_buildings(graph, overpass_to_geojson(payload))
        assert report.added == 3


def _response(body: bytes):
    reply = io.BytesIO(body)
    reply.__enter__ = lambda *a: reply
    reply.__exit__ = lambda *a: False
    return reply


class TestFetch:
    def test_posts_query_and_parses_json(self):
        document = {"elements": [{"type": "node", "id": 1, "lat": 1.0, "lon": 2.0}]}
        with mock.patch("urllib.request.urlopen",
                        return_value=_response(json.dumps(document).encode())) as opened:
            payload = overpass_fetch("QUERY", endpoint="http://unit.test/api")
        assert payload == document
        request = opened.call_args[0][0]
        assert request.full_url == "http://unit.test/api"
        assert b"data=QUERY" == request.data

    def test_http_error_wrapped(self):
        err = urllib.error.HTTPError("u", 504, "Gateway Timeout", {}, io.BytesIO(b""))
        with mock.patch("urllib.request.urlopen", side_effect=err):
            with pytest.raises(FetchError, match="HTTP 504"):
                overpass_fetch("Q", endpoint="http://unit.test/api")

    def test_unreachable_wrapped(self):
        with mock.patch("urllib.request.urlopen",
                        side_effect=urllib.error.URLError("refused")):
            with pytest.raises(FetchError, match="cannot reach"):
                overpass_fetch("Q", endpoint="http://unit.test/api")

    def test_bad_json_wrapped(self):
        with mock.patch("urllib.request.urlopen", return_value=_response(b"<html>")):
            with pytest.raises(FetchError, match="not valid JSON"):
                overpass_fetch("Q", endpoint="http://unit.test/api")

    def test_missing_elements_wrapped(self):
        with mock.patch("urllib.request.urlopen", return_value=_response(b"{}")):
            with pytest.raises(FetchError, match="no elements"):
                overpass_fetch("Q", endpoint="http://unit.test/api")

    def test_fetch_city_writes_three_layers(self, tmp_path):
        def fake_urlopen(request, timeout=None):
            query = request.data.decode()
            if "highway" in query:
                doc = {"elements": [
                    {"type": "way", "id": 1, "tags": {"highway": "trunk", "name": "R"},
                     "geometry": [{"lat": 35.7, "lon": 139.8},
                                  {"lat": 35.71, "lon": 139.81}]},
                ]}
            elif "man_made" in query:
                doc = {"elements": [
                    {"type": "way", "id": 2, "center": {"lat": 35.705, "lon": 139.805},
                     "tags": {"man_made": "bridge", "name": "B"}},
                ]}
            else:
                doc = {"elements": [
                    {"type": "node", "id": 3, "lat": 35.7, "lon": 139.8,
                     "tags": {"shop": "bakery"}},
                ]}
            return _response(json.dumps(doc).encode())

        with mock.patch("urllib.request.urlopen", side_effect=fake_urlopen):
            paths = fetch_city(BOX, tmp_path / "data", endpoint="http://unit.test/api")
        assert set(paths) == {"streets", "bridges", "buildings"}
        for name, path in paths.items():
            fc = json.loads(path.read_text())
            assert fc["type"] == "FeatureCollection"
            assert len(fc["features"]) == 1, name
