"""HTTP API over a pipeline snapshot.

A small stdlib server exposing the classification results read-only plus
a what-if endpoint that recomputes coverage under new parameters.  The
snapshot never changes after startup, so every GET payload is rendered
once and the threaded server needs no locking; what-if requests are pure
functions of the snapshot and run concurrently.

Endpoints (all JSON):
    GET  /api/v1/bridges          bridge identity and location rows
    GET  /api/v1/classification   per-bridge category, confidence, color
    GET  /api/v1/embedding2d      2D layout coordinates with cluster ids
    GET  /api/v1/metrics          run metrics and configuration echo
    GET  /api/v1/overlay          GeoJSON point overlay
    POST /api/v1/whatif           re-run coverage with parameter overrides

With a static directory configured, any non-API path serves files from
it, which is how the map console is hosted in production.
"""

from __future__ import annotations

import errno
import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .metapath import CATEGORY_COLORS
from .pipeline import CitySnapshot, InvalidK, WhatIfRequest, export_overlay, whatif

__all__ = ["ServiceError", "PortInUse", "ApiServer", "make_server", "serve"]

log = logging.getLogger(__name__)

API_PREFIX = "/api/v1/"
MAX_BODY_BYTES = 1 << 20


class ServiceError(RuntimeError):
    """The server could not start or answer."""


class PortInUse(ServiceError):
    """The requested port is already bound."""


def bridges_payload(snapshot: CitySnapshot) -> list[dict]:
    rows = []
    for bid in snapshot.bridge_ids():
        node = snapshot.graph.nodes[bid]
        rows.append({
            "bridge_id": bid,
            "name": node.name or "",
            "lat": node.geo.lat,
            "lon": node.geo.lon,
            "span_m": node.span_m,
            "year_built": node.year_built,
        })
    return rows


def classification_payload(snapshot: CitySnapshot) -> list[dict]:
    cluster_of = snapshot.cluster_of()
    rows = []
    for prof, cls in zip(snapshot.profiles, snapshot.classifications):
        node = snapshot.graph.nodes[prof.bridge_id]
        rows.append({
            "bridge_id": prof.bridge_id,
            "name": node.name or "",
            "lat": node.geo.lat,
            "lon": node.geo.lon,
            "shop_paths": prof.shop_paths,
            "hospital_paths": prof.hospital_paths,
            "residence_paths": prof.residence_paths,
            "highway_count": prof.highway_count,
            "category": cls.category.value,
            "label": cls.label,
            "confidence": cls.confidence,
            "cluster_id": cluster_of.get(prof.bridge_id, -1),
            "color": CATEGORY_COLORS[cls.category],
        })
    return rows


def embedding2d_payload(snapshot: CitySnapshot) -> list[dict]:
    return [
        {"bridge_id": bid, "u": float(row[0]), "v": float(row[1]), "cluster_id": int(label)}
        for bid, row, label in zip(
            snapshot.bridge_ids(), snapshot.coords2d, snapshot.clusters.labels)
    ]


def _render_payloads(snapshot: CitySnapshot) -> dict[str, bytes]:
    documents = {
        "bridges": bridges_payload(snapshot),
        "classification": classification_payload(snapshot),
        "embedding2d": embedding2d_payload(snapshot),
        "metrics": snapshot.metrics,
        "overlay": export_overlay(snapshot),
    }
    return {name: json.dumps(doc).encode() for name, doc in documents.items()}


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, snapshot: CitySnapshot, static_dir: Optional[str] = None):
        self.snapshot = snapshot
        self.payloads = _render_payloads(snapshot)
        self.static_root = Path(static_dir).resolve() if static_dir else None
        if self.static_root is not None and not self.static_root.is_dir():
            raise ServiceError("static directory %s does not exist" % self.static_root)
        try:
            super().__init__(address, _Handler)
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                raise PortInUse("port %d is already in use" % address[1]) from exc
            raise ServiceError(str(exc)) from exc


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: ApiServer

    def log_message(self, format, *args):
        log.debug("%s - %s", self.address_string(), format % args)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _respond(self, status: int, body: bytes, content_type="application/json") -> None:
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, document) -> None:
        self._respond(status, json.dumps(document).encode())

    def _error(self, status: int, message: str) -> None:
        self._json(status, {"error": message})

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path.startswith(API_PREFIX):
            name = path[len(API_PREFIX):].rstrip("/")
            payload = self.server.payloads.get(name)
            if payload is None:
                self._error(404, "unknown endpoint: %s" % path)
                return
            self._respond(200, payload)
            return
        if self.server.static_root is not None:
            self._serve_static(path)
            return
        self._error(404, "no such path: %s (API lives under %s)" % (path, API_PREFIX))

    def _serve_static(self, path: str) -> None:
        relative = path.lstrip("/") or "index.html"
        target = (self.server.static_root / relative).resolve()
        # resolved path must stay inside the static root
        if not target.is_relative_to(self.server.static_root):
            self._error(403, "forbidden")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._error(404, "not found: %s" % path)
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._respond(200, target.read_bytes(), content_type=ctype)

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        if path.rstrip("/") != API_PREFIX + "whatif":
            self._error(404, "unknown endpoint: %s" % path)
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            self._error(400, "bad Content-Length")
            return
        if length > MAX_BODY_BYTES:
            self._error(413, "request body too large")
            return
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw.decode() or "{}")
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._error(400, "request body is not valid JSON: %s" % exc)
            return
        try:
            request = WhatIfRequest.from_dict(body, self.server.snapshot.config.thresholds)
            outcome = whatif(self.server.snapshot, request)
        except InvalidK as exc:
            self._error(400, str(exc))
            return
        except Exception as exc:
            log.exception("what-if failed")
            self._error(500, "internal error: %s" % exc)
            return
        self._json(200, outcome.to_dict())


def make_server(snapshot: CitySnapshot, host: str = "127.0.0.1", port: int = 8787,
                static_dir: Optional[str] = None) -> ApiServer:
    """Bind and return the server without starting its loop.

    Port 0 picks an ephemeral port; read it back from server_address.
    """
    return ApiServer((host, port), snapshot, static_dir)


def serve(snapshot: CitySnapshot, host: str = "127.0.0.1", port: int = 8787,
          static_dir: Optional[str] = None) -> None:
    """Run the API until interrupted."""
    server = make_server(snapshot, host, port, static_dir)
    host_out, port_out = server.server_address[:2]
    log.info("serving on http://%s:%d", host_out, port_out)
    print("serving on http://%s:%d (Ctrl+C stops)" % (host_out, port_out))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


class BackgroundServer:
    """Context manager running the API on a daemon thread (tests, demos)."""

    def __init__(self, snapshot: CitySnapshot, host: str = "127.0.0.1", port: int = 0,
                 static_dir: Optional[str] = None):
        self.server = make_server(snapshot, host, port, static_dir)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return "http://%s:%d" % (host, port)

    def __enter__(self) -> "BackgroundServer":
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
        return False
