"""Command-line entry point: ``skillgraph <command> [options]``.

Exit codes: 0 all good, 1 some check/task failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .agent import AgentConfig, EpisodeResult, PlannerContractError, run_episode, run_task, write_transcript
from .agent import make_planner
from .model import LibraryError, SkillLibrary, library_stats, load_library
from .retrieval import (
    HashingEmbedder,
    ProviderError,
    SkillIndex,
    WireEmbeddingProvider,
    build_index,
    hybrid_retrieve,
)
from .sim.env import DesktopSim
from .synth import SynthError, export_dataset, load_dataset, synthesize_tasks

BUNDLED_LIBRARY = Path(__file__).parent / "library"
log = logging.getLogger("skillgraph")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    library: Path = BUNDLED_LIBRARY
    index: Path | None = None
    seed: int = 42
    out: Path | None = None
    k: int = 3
    l: int = 10
    max_steps: int = 30
    fmt: str = "text"
    jobs: int = 1
    verbose: int = 0

    def agent_config(self) -> AgentConfig:
        return AgentConfig(query_budget=self.k, skill_budget=self.l, max_steps=self.max_steps, seed=self.seed)


def _config(ns: argparse.Namespace) -> CliConfig:
    lib = Path(ns.library)
    if not lib.is_dir():
        raise UsageError(f"library path {lib} is not a readable directory")
    if getattr(ns, "index", None) and not Path(ns.index).is_file():
        raise UsageError(f"index file {ns.index} does not exist")
    for name in ("k", "l", "max_steps", "jobs"):
        if getattr(ns, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    return CliConfig(
        library=lib,
        index=Path(ns.index) if getattr(ns, "index", None) else None,
        seed=ns.seed,
        out=Path(ns.out) if ns.out else None,
        k=ns.k,
        l=ns.l,
        max_steps=ns.max_steps,
        fmt=ns.format,
        jobs=ns.jobs,
        verbose=ns.verbose,
    )


def _emit(cfg: CliConfig, text: str, record: dict) -> None:
    print(json.dumps(record, ensure_ascii=False) if cfg.fmt == "json-lines" else text)


def _load(cfg: CliConfig) -> SkillLibrary:
    try:
        return load_library(cfg.library)
    except LibraryError as e:
        raise UsageError(f"library {cfg.library} is invalid ({len(e.issues)} issues); run 'validate'") from e


def _outdir(cfg: CliConfig) -> Path:
    out = cfg.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------- commands


def cmd_validate(cfg: CliConfig, ns) -> int:
    try:
        lib = load_library(cfg.library)
    except LibraryError as e:
        for issue in e.issues:
            code, _, detail = issue.partition(": ")
            _emit(cfg, issue, {"code": code, "detail": detail})
        _emit(cfg, f"{len(e.issues)} violation(s)", {"violations": len(e.issues)})
        return 1
    _emit(cfg, f"{len(lib.skills)} skills, 0 violations", {"skills": len(lib.skills), "violations": 0})
    return 0


def cmd_stats(cfg: CliConfig, ns) -> int:
    table = library_stats(_load(cfg))
    if cfg.fmt == "json-lines":
        for row in (*table.rows, table.total) if table.rows else ():
            print(json.dumps(asdict(row)))
    else:
        sys.stdout.write(table.format())
    return 0


def cmd_synth(cfg: CliConfig, ns) -> int:
    lib = _load(cfg)
    lo, _, hi = ns.length.partition("-")
    try:
        length = (int(lo), int(hi or lo))
        tasks = synthesize_tasks(lib, ns.count, cfg.seed, length, jobs=cfg.jobs)
    except ValueError as e:
        raise UsageError(str(e)) from e
    path = _outdir(cfg) / ns.name
    n = export_dataset(tasks, path)
    _emit(cfg, f"wrote {n} tasks to {path}", {"tasks": n, "path": str(path)})
    return 0


def _build_provider(spec: str):
    if spec == "hashing":
        return HashingEmbedder()
    if spec.startswith("wire:"):
        return WireEmbeddingProvider(spec[5:])
    raise UsageError(f"unknown provider {spec!r}")


def cmd_index(cfg: CliConfig, ns) -> int:
    lib = _load(cfg)
    idx = build_index(lib, _build_provider(ns.provider))
    path = _outdir(cfg) / "index.json"
    idx.save(path)
    _emit(cfg, f"indexed {len(idx.doc_terms)} skills with {idx.provider_id} -> {path}",
          {"skills": len(idx.doc_terms), "provider": idx.provider_id, "path": str(path)})
    return 0


def _index(cfg: CliConfig, lib: SkillLibrary | None = None) -> SkillIndex:
    if cfg.index is not None:
        return SkillIndex.load(cfg.index)
    return build_index(lib if lib is not None else _load(cfg))


def cmd_search(cfg: CliConfig, ns) -> int:
    idx = _index(cfg)
    provider = _build_provider(ns.provider) if ns.provider != "hashing" else None
    results = hybrid_retrieve(idx, ns.query, ns.per_channel_k, provider)[: ns.top]
    for r in results:
        _emit(cfg, f"{r.rank:>3}  {r.skill_id:<28} {r.channel:<8} bm25={r.lexical_score:.4f} cos={r.semantic_score:.4f}",
              {"rank": r.rank, "skill": r.skill_id, "channel": r.channel,
               "lexical": r.lexical_score, "semantic": r.semantic_score})
    return 0


_shared: dict = {}


def _init_worker(lib, idx, planner, acfg) -> None:
    _shared.update(lib=lib, idx=idx, planner=planner, acfg=acfg)


def _run_shared(task) -> tuple[str, str, int, str, list[dict]]:
    return _run_one((_shared["lib"], _shared["idx"], task, _shared["planner"], _shared["acfg"]))


def _run_one(args) -> tuple[str, str, int, str, list[dict]]:
    lib, idx, task, planner, acfg = args
    try:
        res: EpisodeResult = run_task(lib, idx, task, planner, acfg)
        return task.id, res.status, res.steps, res.detail, res.transcript
    except PlannerContractError as e:
        return task.id, "fail", 0, f"planner contract violation: {e}", []


def cmd_run(cfg: CliConfig, ns) -> int:
    lib = _load(cfg)
    idx = _index(cfg, lib)
    acfg = cfg.agent_config()
    if ns.instruction:
        planner = make_planner(ns.planner) if ns.planner != "gold" else None
        if planner is None:
            raise UsageError("--instruction needs the scripted or a wire planner (gold needs a dataset)")
        res = run_episode(ns.instruction, lib, idx, DesktopSim(), planner, acfg)
        outcomes = [("instruction", res.status, res.steps, res.detail, res.transcript)]
    else:
        if not ns.dataset:
            raise UsageError("run needs --dataset or --instruction")
        try:
            tasks = load_dataset(ns.dataset)
        except (OSError, SynthError) as e:
            raise UsageError(str(e)) from e
        if cfg.jobs > 1 and len(tasks) > 1:
            init = (lib, idx, ns.planner, acfg)
            with ProcessPoolExecutor(cfg.jobs, initializer=_init_worker, initargs=init) as pool:
                outcomes = list(pool.map(_run_shared, tasks, chunksize=32))
        else:
            outcomes = [_run_one((lib, idx, t, ns.planner, acfg)) for t in tasks]

    tdir = None
    if cfg.out is not None:
        tdir = _outdir(cfg) / "transcripts"
        tdir.mkdir(exist_ok=True)
    passed = 0
    for tid, status, steps, detail, transcript in outcomes:
        passed += status == "success"
        if tdir is not None:
            write_transcript(EpisodeResult(status, steps, None, [], transcript), tdir / f"{tid}.jsonl", tid)
        if cfg.verbose or status != "success":
            _emit(cfg, f"{tid} {status} steps={steps} {detail}".rstrip(),
                  {"task": tid, "status": status, "steps": steps, "detail": detail})
    rate = 100.0 * passed / len(outcomes) if outcomes else 0.0
    _emit(cfg, f"success_rate={rate:.1f}% ({passed}/{len(outcomes)})",
          {"success_rate": rate, "passed": passed, "total": len(outcomes)})
    return 0 if passed == len(outcomes) else 1


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--library", default=str(BUNDLED_LIBRARY), help="skill library root (default: bundled fixtures)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--planner", default="gold", help="gold, scripted, or wire:<endpoint>")
    common.add_argument("--k", type=int, default=3, help="query budget per step")
    common.add_argument("--l", type=int, default=10, help="cap on merged retrieval candidates")
    common.add_argument("--max-steps", type=int, default=30)
    common.add_argument("--format", choices=("text", "json-lines"), default="text")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="skillgraph", description="Skill graphs for desktop agents.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="parse and validate a skill library")
    sub.add_parser("stats", parents=[common], help="per-application primitive-count table")

    s = sub.add_parser("synth", parents=[common], help="synthesize executable tasks")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--length", default="1-8", help="skill path length range, e.g. 1-8")
    s.add_argument("--name", default="tasks.jsonl", help="dataset file name inside --out")

    r = sub.add_parser("run", parents=[common], help="run agent episodes")
    r.add_argument("--dataset", help="dataset written by 'synth'")
    r.add_argument("--instruction", help="single instruction to run")
    r.add_argument("--index", help="index file written by 'index' (default: build in memory)")

    i = sub.add_parser("index", parents=[common], help="build the retrieval index")
    i.add_argument("--provider", default="hashing", help="hashing or wire:<endpoint>")

    q = sub.add_parser("search", parents=[common], help="hybrid search over skills")
    q.add_argument("query", nargs="+", help="one or more queries")
    q.add_argument("--index", help="index file (default: build from --library)")
    q.add_argument("--provider", default="hashing", help="embedding provider for queries")
    q.add_argument("--per-channel-k", type=int, default=5)
    q.add_argument("--top", type=int, default=10)
    return p


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "synth": cmd_synth,
    "run": cmd_run,
    "index": cmd_index,
    "search": cmd_search,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose > 1 else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(ns)
        return COMMANDS[ns.command](cfg, ns)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ProviderError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
