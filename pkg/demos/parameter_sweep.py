"""Explore how the nearest-building parameters reshape bridge roles.

Loads (or builds) a snapshot, then answers three planning questions
without retraining anything:

  1. How does supply coverage grow as k_shop widens?
  2. Which bridges change role if residence coverage collapses?
  3. Which five bridges should be funded first under each setting?

    python3 demos/parameter_sweep.py [snapshot_dir]
"""

import sys
from pathlib import Path

from bridgeroles.pipeline import (
    PipelineConfig,
    WhatIfRequest,
    load_snapshot,
    run_pipeline,
    whatif,
)
from bridgeroles.synthcity import write_city


def ensure_snapshot(snapshot_dir: Path):
    if (snapshot_dir / "snapshot.json").exists():
        print("loading snapshot from %s" % snapshot_dir)
        return load_snapshot(snapshot_dir)
    print("no snapshot found; building a 30-bridge synthetic city first")
    paths = write_city(snapshot_dir.parent / "data", n_bridges=30)
    config = PipelineConfig(
        streets_path=str(paths["streets"]),
        bridges_path=str(paths["bridges"]),
        buildings_path=str(paths["buildings"]),
        out_dir=str(snapshot_dir),
    )
    return run_pipeline(config)


def main() -> int:
    snapshot_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(
        "demos/out/sweep/snapshot")
    snapshot = ensure_snapshot(snapshot_dir)

    print()
    print("1. supply coverage as k_shop widens")
    print("   %-8s %-14s %-10s" % ("k_shop", "supply paths", "delta"))
    baseline = None
    for k in (1, 3, 5, 10):
        outcome = whatif(snapshot, WhatIfRequest(k_shop=k))
        total = outcome.coverage_after["shop"]
        if baseline is None:
            baseline = total
        print("   %-8d %-14d %+d" % (k, total, total - baseline))

    print()
    print("2. role changes if residence coverage collapses (k_residence 20 -> 2)")
    outcome = whatif(snapshot, WhatIfRequest(k_residence=2))
    if not outcome.changed:
        print("   no bridge changes role")
    for change in outcome.changed:
        print("   %-22s %s -> %s (confidence %.3f -> %.3f)" % (
            change["name"], change["before"]["label"], change["after"]["label"],
            change["before"]["confidence"], change["after"]["confidence"]))

    print()
    print("3. top-5 funding list, before vs after the coverage collapse")
    for title, request in (("current parameters", WhatIfRequest(budget_n=5)),
                           ("k_residence = 2", WhatIfRequest(k_residence=2, budget_n=5))):
        outcome = whatif(snapshot, request)
        names = ", ".join("%s (%s)" % (r["name"], r["label"]) for r in outcome.budget)
        print("   %-20s %s" % (title + ":", names))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
