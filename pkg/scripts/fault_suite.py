"""Run the scripted planner over the fault-injection suite: each task's first
use of one hotkey is rejected, and the episode has to recover through the
failure record in memory."""

import argparse

from skillgraph.agent import AgentConfig, audit_transcript, basic_skill_set, build_fault_suite, run_task
from skillgraph.cli import BUNDLED_LIBRARY
from skillgraph.model import load_library
from skillgraph.retrieval import build_index


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("-v", "--verbose", action="store_true", help="print every episode's skill sequence")
    args = ap.parse_args()

    lib = load_library(BUNDLED_LIBRARY)
    index = build_index(lib)
    n_basic = len(basic_skill_set(lib))
    ok = 0
    for case in build_fault_suite(lib, args.n, args.seed):
        env = case.env()
        res = run_task(lib, index, case.task, "scripted", AgentConfig(), env)
        issues = audit_transcript(res.transcript, n_basic)
        ok += res.ok and not issues
        if args.verbose or not res.ok or issues:
            seq = ", ".join(f"{r.skill_id}{'(failed)' if r.failed else ''}" for r in res.memory.records)
            print(f"{case.task.id} {res.status:<8} faults={env.injected} {seq}")
            for i in issues:
                print(f"    audit: {i}")
    print(f"recovered {ok}/{args.n} ({100.0 * ok / args.n:.1f}%)")


if __name__ == "__main__":
    main()
