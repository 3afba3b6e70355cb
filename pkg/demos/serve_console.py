"""Build a demo snapshot and serve the HTTP API (plus the map console).

    python3 demos/serve_console.py [port]

If frontend/dist exists its files are served at /, so the browser gets
the interactive console; otherwise only the JSON API is exposed.
"""

import sys
from pathlib import Path

from bridgeroles.pipeline import PipelineConfig, load_snapshot, run_pipeline
from bridgeroles.service import serve
from bridgeroles.synthcity import write_city

SNAPSHOT_DIR = Path("demos/out/console/snapshot")
FRONTEND_DIST = Path("frontend/dist")


def main() -> int:
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8787
    if (SNAPSHOT_DIR / "snapshot.json").exists():
        snapshot = load_snapshot(SNAPSHOT_DIR)
        print("loaded snapshot %s" % snapshot.content_hash[:12])
    else:
        paths = write_city(SNAPSHOT_DIR.parent / "data", n_bridges=30)
        config = PipelineConfig(
            streets_path=str(paths["streets"]),
            bridges_path=str(paths["bridges"]),
            buildings_path=str(paths["buildings"]),
            out_dir=str(SNAPSHOT_DIR),
        )
        snapshot = run_pipeline(config)
        print("built snapshot %s" % snapshot.content_hash[:12])

    static_dir = str(FRONTEND_DIST) if FRONTEND_DIST.is_dir() else None
    if static_dir:
        print("serving the map console from %s" % static_dir)
    else:
        print("frontend/dist not found; serving the JSON API only")
        print("(build it with: cd frontend && npm install && npm run build)")
    serve(snapshot, port=port, static_dir=static_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
