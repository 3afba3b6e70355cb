"""HTTP API tests against a live threaded server on an ephemeral port."""

import concurrent.futures
import dataclasses
import json
import urllib.error
import urllib.request

import pytest

from bridgeroles.pipeline import PipelineConfig, run_pipeline
from bridgeroles.service import BackgroundServer, PortInUse, ServiceError, make_server
from bridgeroles.synthcity import write_city

N_BRIDGES = 10


@pytest.fixture(scope="module")
def snapshot(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    paths = write_city(tmp / "city", n_bridges=N_BRIDGES)
    cfg = PipelineConfig(
        streets_path=str(paths["streets"]),
        bridges_path=str(paths["bridges"]),
        buildings_path=str(paths["buildings"]),
        out_dir=str(tmp / "out"),
        umap_epochs=50,
    )
    cfg = dataclasses.replace(cfg, encoder=dataclasses.replace(cfg.encoder, max_epochs=30))
    return run_pipeline(cfg)


@pytest.fixture(scope="module")
def server(snapshot):
    with BackgroundServer(snapshot) as running:
        yield running


def get(server, path):
    with urllib.request.urlopen(server.url + path, timeout=10) as resp:
        return resp.status, dict(resp.headers), json.loads(resp.read().decode())


def post(server, path, document):
    data = json.dumps(document).encode()
    req = urllib.request.Request(
        server.url + path, data=data, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=10) as resp:
        return resp.status, json.loads(resp.read().decode())


class TestGet:
    def test_bridges(self, server, snapshot):
        status, headers, rows = get(server, "/api/v1/bridges")
        assert status == 200
        assert headers["Content-Type"] == "application/json"
        assert len(rows) == N_BRIDGES
        assert {r["bridge_id"] for r in rows} == set(snapshot.bridge_ids())
        for row in rows:
            assert set(row) == {"bridge_id", "name", "lat", "lon", "span_m", "year_built"}

    def test_classification(self, server, snapshot):
        _, _, rows = get(server, "/api/v1/classification")
        assert len(rows) == N_BRIDGES
        by_id = {r["bridge_id"]: r for r in rows}
        for cls in snapshot.classifications:
            row = by_id[cls.bridge_id]
            assert row["label"] == cls.label
            assert row["confidence"] == cls.confidence
            assert row["color"].startswith("#") and len(row["color"]) == 7

    def test_embedding2d(self, server, snapshot):
        _, _, rows = get(server, "/api/v1/embedding2d")
        assert len(rows) == N_BRIDGES
        assert rows[0]["u"] == snapshot.coords2d[0, 0]
        assert rows[0]["cluster_id"] == int(snapshot.clusters.labels[0])

    def test_metrics(self, server, snapshot):
        _, _, doc = get(server, "/api/v1/metrics")
        assert doc["content_hash"] == snapshot.content_hash
        assert doc["counts"]["bridge"] == N_BRIDGES
        assert "config" in doc

    def test_overlay(self, server):
        _, _, doc = get(server, "/api/v1/overlay")
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) == N_BRIDGES

    def test_unknown_endpoint_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            get(server, "/api/v1/nope")
        assert err.value.code == 404
        assert "error" in json.loads(err.value.read().decode())

    def test_non_api_path_404_without_static_dir(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            get(server, "/index.html")
        assert err.value.code == 404

    def test_cors_headers_present(self, server):
        _, headers, _ = get(server, "/api/v1/bridges")
        assert headers["Access-Control-Allow-Origin"] == "*"

    def test_options_preflight(self, server):
        req = urllib.request.Request(server.url + "/api/v1/whatif", method="OPTIONS")
        with urllib.request.urlopen(req, timeout=10) as resp:
            assert resp.status == 204
            assert resp.headers["Access-Control-Allow-Origin"] == "*"
            assert "POST" in resp.headers["Access-Control-Allow-Methods"]


class TestWhatIfEndpoint:
    def test_identity(self, server):
        status, doc = post(server, "/api/v1/whatif", {})
        assert status == 200
        assert doc["changed"] == []
        assert doc["coverage_delta"] == {"shop": 0, "hospital": 0, "residence": 0}

    def test_override_changes_coverage(self, server):
        _, doc = post(server, "/api/v1/whatif", {"k_shop": 1})
        assert doc["request"]["k_shop"] == 1
        assert doc["coverage_delta"]["shop"] < 0

    def test_budget(self, server):
        _, doc = post(server, "/api/v1/whatif", {"budget_n": 4})
        assert len(doc["budget"]) == 4
        assert [r["rank"] for r in doc["budget"]] == [1, 2, 3, 4]

    def test_invalid_k_400(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            post(server, "/api/v1/whatif", {"k_shop": 0})
        assert err.value.code == 400
        assert "error" in json.loads(err.value.read().decode())

    def test_unknown_key_400(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            post(server, "/api/v1/whatif", {"k_shops": 2})
        assert err.value.code == 400

    def test_malformed_json_400(self, server):
        req = urllib.request.Request(
            server.url + "/api/v1/whatif", data=b"{not json",
            headers={"Content-Type": "application/json"})
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(req, timeout=10)
        assert err.value.code == 400

    def test_post_to_get_endpoint_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            post(server, "/api/v1/bridges", {})
        assert err.value.code == 404

    def test_concurrent_identical_requests_agree(self, server):
        def run(_):
            return post(server, "/api/v1/whatif", {"k_shop": 2, "budget_n": 3})[1]

        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(run, range(8)))
        first = results[0]
        assert all(r == first for r in results)


class TestStatic:
    def test_serves_files_and_index(self, snapshot, tmp_path):
        (tmp_path / "index.html").write_text("<h1>console</h1>")
        (tmp_path / "app.js").write_text("// ok")
        with BackgroundServer(snapshot, static_dir=str(tmp_path)) as running:
            with urllib.request.urlopen(running.url + "/", timeout=10) as resp:
                assert resp.status == 200
                assert b"console" in resp.read()
                assert resp.headers["Content-Type"].startswith("text/html")
            with urllib.request.urlopen(running.url + "/app.js", timeout=10) as resp:
                assert resp.read() == b"// ok"
            # API still wins over static files
            with urllib.request.urlopen(running.url + "/api/v1/bridges", timeout=10) as resp:
                assert resp.status == 200

    def test_traversal_blocked(self, snapshot, tmp_path):
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("ok")
        (tmp_path / "secret.txt").write_text("no")
        with BackgroundServer(snapshot, static_dir=str(static)) as running:
            with pytest.raises(urllib.error.HTTPError) as err:
                urllib.request.urlopen(
                    running.url + "/%2e%2e/secret.txt", timeout=10)
            assert err.value.code in (403, 404)

    def test_missing_static_dir_rejected(self, snapshot, tmp_path):
        with pytest.raises(ServiceError):
            make_server(snapshot, port=0, static_dir=str(tmp_path / "missing"))


class TestLifecycle:
    def test_port_in_use(self, snapshot):
        with BackgroundServer(snapshot) as running:
            port = running.server.server_address[1]
            with pytest.raises(PortInUse):
                make_server(snapshot, port=port)

    def test_ephemeral_port_reported(self, snapshot):
        with BackgroundServer(snapshot) as running:
            assert running.url.startswith("http://127.0.0.1:")
            port = int(running.url.rsplit(":", 1)[1])
            assert port > 0
