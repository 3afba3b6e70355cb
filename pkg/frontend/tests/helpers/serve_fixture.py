"""Build a small demo snapshot and serve it on an ephemeral port.

Prints one JSON line {"url": ...} once the server is bound, then blocks.
The UI contract tests spawn this, read the line, and talk HTTP.

The base config uses k_shop=3 so the canonical slider move (3 -> 5)
exercises a real delta.
"""

import dataclasses
import json
import tempfile
from pathlib import Path

from bridgeroles.pipeline import PipelineConfig, run_pipeline
from bridgeroles.service import make_server
from bridgeroles.synthcity import write_city


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="whatif-ui-fixture-"))
    paths = write_city(tmp / "city", n_bridges=12)
    config = PipelineConfig(
        streets_path=str(paths["streets"]),
        bridges_path=str(paths["bridges"]),
        buildings_path=str(paths["buildings"]),
        out_dir=str(tmp / "out"),
        k_shop=3,
        umap_epochs=60,
    )
    config = dataclasses.replace(
        config, encoder=dataclasses.replace(config.encoder, max_epochs=40))
    snapshot = run_pipeline(config)
    server = make_server(snapshot, "127.0.0.1", 0)
    print(json.dumps({"url": "http://127.0.0.1:%d" % server.server_address[1]}), flush=True)
    server.serve_forever()


if __name__ == "__main__":
    main()
