"""Tests for the deterministic synthetic city generator."""

import json

import pytest

from bridgeroles import graphbuild as gb
from bridgeroles.metapath import classify_all, profile
from bridgeroles.synthcity import synth_city, write_city


def build(city):
    graph = gb.HetGraph()
    gb.ingest_streets(graph, city["streets"])
    gb.ingest_bridges(graph, city["bridges"])
    gb.ingest_buildings(graph, city["buildings"])
    gb.snap_bridges(graph)
    gb.knn_building_edges(graph)
    gb.highway_metapath_counts(graph)
    return graph


def test_bridge_count_parametrized():
    for n in (2, 6, 12, 30):
        city = synth_city(n)
        assert len(city["bridges"]["features"]) == n
    with pytest.raises(ValueError):
        synth_city(1)
    with pytest.raises(ValueError):
        synth_city(2.5)


def test_generator_is_deterministic():
    a = json.dumps(synth_city(30), sort_keys=True)
    b = json.dumps(synth_city(30), sort_keys=True)
    assert a == b


def test_city_exercises_every_category():
    graph = build(synth_city(30))
    labels = [c.label for c in classify_all(profile(graph))]
    assert labels.count("SupplyChain") == 7
    assert labels.count("MedicalAccess") == 7
    assert labels.count("ResidentialProtection") == 7
    assert labels.count("Mixed(shop)") == 4
    assert labels.count("Mixed(residence)") == 3
    assert labels.count("BalancedMultiUse") == 2


def test_corridor_hubs_beat_detached_bridges():
    graph = build(synth_city(30))
    counts = [graph.highway_counts[b] for b in graph.bridge_ids()]
    main, detached = counts[:-2], counts[-2:]
    assert min(main) > max(detached)
    assert max(detached) == 0


def test_every_bridge_snapped_once():
    graph = build(synth_city(12))
    snap_edges = graph.edges[gb.RelationKind.STREET_TO_BRIDGE]
    seen = [b for _, b in snap_edges]
    assert sorted(seen) == sorted(graph.bridge_ids())


def test_small_city_has_no_detached_component():
    graph = build(synth_city(4))
    counts = [graph.highway_counts[b] for b in graph.bridge_ids()]
    assert min(counts) > 0


def test_write_city_round_trips(tmp_path):
    paths = write_city(tmp_path / "city", n_bridges=8)
    assert set(paths) == {"streets", "bridges", "buildings"}
    for path in paths.values():
        fc = json.loads(path.read_text())
        assert fc["type"] == "FeatureCollection"
        assert fc["features"]
