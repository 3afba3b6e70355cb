"""Generate a synthetic river city, classify its bridges, print the results.

Run from the repository root:

    python3 demos/quickstart.py [n_bridges] [out_dir]

Writes the full snapshot under out_dir (default demos/out/quickstart) and
prints the classification table plus a funding shortlist.
"""

import sys
from pathlib import Path

from bridgeroles.pipeline import PipelineConfig, run_pipeline, whatif, WhatIfRequest
from bridgeroles.synthcity import write_city


def main() -> int:
    n_bridges = int(sys.argv[1]) if len(sys.argv) > 1 else 30
    out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demos/out/quickstart")

    data_dir = out_dir / "data"
    print("writing a %d-bridge synthetic city to %s" % (n_bridges, data_dir))
    paths = write_city(data_dir, n_bridges=n_bridges)

    config = PipelineConfig(
        streets_path=str(paths["streets"]),
        bridges_path=str(paths["bridges"]),
        buildings_path=str(paths["buildings"]),
        out_dir=str(out_dir / "snapshot"),
    )
    print("running the pipeline (train, classify, analyze, export)...")
    snapshot = run_pipeline(config)

    print()
    print("%-6s %-22s %-26s %10s %8s" % ("id", "name", "category", "confidence", "cluster"))
    cluster_of = snapshot.cluster_of()
    for prof, cls in zip(snapshot.profiles, snapshot.classifications):
        node = snapshot.graph.nodes[prof.bridge_id]
        print("%-6d %-22s %-26s %10.3f %8d" % (
            prof.bridge_id, node.name or "?", cls.label, cls.confidence,
            cluster_of.get(prof.bridge_id, -1)))

    print()
    totals = snapshot.metrics["label_totals"]
    for label in sorted(totals):
        print("  %-26s %d" % (label, totals[label]))

    shortlist = whatif(snapshot, WhatIfRequest(budget_n=min(5, n_bridges)))
    print()
    print("if only %d bridges can be reinforced first:" % len(shortlist.budget))
    for row in shortlist.budget:
        print("  %d. %-22s %-26s confidence %.3f" % (
            row["rank"], row["name"], row["label"], row["confidence"]))

    print()
    print("snapshot %s -> %s" % (snapshot.content_hash[:12], config.out_dir))
    print("open the map console with:")
    print("  bridgeroles serve --out %s --port 8787" % config.out_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
