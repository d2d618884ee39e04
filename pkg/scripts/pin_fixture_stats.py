"""Recompute per-skill primitive counts for the bundled library with networkx
and pin them (plus the formatted table) under tests/golden/.

Counts are the longest guard-free simple start-to-terminal path, or the
longest simple path when every path crosses a guard. Run after editing the
fixture library, then review the diff.
"""

import argparse
import json
import statistics
from pathlib import Path

import networkx as nx

from skillgraph.cli import BUNDLED_LIBRARY
from skillgraph.model import library_stats, load_library

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"


def oracle_count(spec) -> int:
    g = spec.graph

    def longest(use_guarded: bool) -> int:
        dg = nx.MultiDiGraph()
        dg.add_nodes_from(g.nodes)
        for e in g.edges:
            if use_guarded or e.guard is None:
                dg.add_edge(e.src, e.dst)
        best = -1
        for t in g.terminals:
            if t == g.start:
                best = max(best, 0)
                continue
            for path in nx.all_simple_paths(dg, g.start, t):
                best = max(best, len(path) - 1)
        return best

    n = longest(False)
    return n if n >= 0 else longest(True)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--library", default=str(BUNDLED_LIBRARY))
    ap.add_argument("--check", action="store_true", help="compare instead of writing")
    args = ap.parse_args()

    lib = load_library(args.library)
    counts = {sid: oracle_count(s) for sid, s in lib.skills.items()}
    per_app: dict[str, list[int]] = {}
    for sid, s in lib.skills.items():
        per_app.setdefault(s.application, []).append(counts[sid])
    summary = {
        app: {"count": len(v), "mean": statistics.fmean(v), "std": statistics.pstdev(v), "min": min(v), "max": max(v)}
        for app, v in sorted(per_app.items())
    }
    pinned = {"counts": counts, "apps": summary}
    table = library_stats(lib).format()

    if args.check:
        old = json.loads((GOLDEN / "fixture_counts.json").read_text())
        ok = old == json.loads(json.dumps(pinned)) and (GOLDEN / "fixture_stats.txt").read_text() == table
        print("golden up to date" if ok else "golden differs")
        raise SystemExit(0 if ok else 1)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    (GOLDEN / "fixture_counts.json").write_text(json.dumps(pinned, indent=1, sort_keys=True) + "\n")
    (GOLDEN / "fixture_stats.txt").write_text(table)
    print(table, end="")


if __name__ == "__main__":
    main()
