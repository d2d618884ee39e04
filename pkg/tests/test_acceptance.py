"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or as part of ``pytest``.
"""

import contextlib
import gc
import io
import json
import math
import socket
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import pytest

from skillgraph.agent import AgentConfig, audit_transcript, basic_skill_set, build_fault_suite, run_task
from skillgraph.cli import BUNDLED_LIBRARY, main
from skillgraph.executor import enumerate_paths
from skillgraph.model import LibraryError, load_library
from skillgraph.retrieval import bm25_score, build_index, hybrid_retrieve, lexical_search, tokenize
from skillgraph.sim import APPS, DesktopSim
from skillgraph.synth import export_dataset, load_dataset, replay_task, synthesize_tasks

from branching import FIXTURE_BRANCHES, branch_frequencies, expected_shares
from conftest import DATA
from simwalk import check_interleavings, check_replay_determinism
from test_retrieval import oracle_bm25, recall_at_10
from test_synth import calc_task

RESULTS: dict[int, tuple[bool, float]] = {}
NETWORK_ATTEMPTS: list = []


@pytest.fixture(scope="module", autouse=True)
def offline():
    """Refuse any socket connection that leaves the machine."""
    real = socket.socket.connect

    def guarded(self, address):
        host = address[0] if isinstance(address, tuple) else str(address)
        if host not in ("127.0.0.1", "localhost", "::1"):
            NETWORK_ATTEMPTS.append(address)
            raise OSError(f"network access blocked during acceptance run: {address}")
        return real(self, address)

    socket.socket.connect = guarded
    yield
    socket.socket.connect = real


@pytest.fixture(scope="module")
def say(request):
    """Write a line to the terminal even while output is captured."""
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    if tr is None:
        return print

    def write(line: str) -> None:
        tr.ensure_newline()
        tr.write_line(line)

    return write


def _report(say, n: int, title: str, budget: float, fn) -> None:
    t0 = time.perf_counter()
    err = None
    try:
        detail = fn()
    except AssertionError as e:
        detail, err = f"assertion failed: {e}".splitlines()[0], e
    took = time.perf_counter() - t0
    ok = err is None and took < budget
    if err is None and not ok:
        detail = f"over time budget ({took:.1f}s >= {budget:.0f}s)"
    RESULTS[n] = (ok, took)
    line = f"{'PASS' if ok else 'FAIL'} criterion {n} ({title}) {took:.1f}s: {detail}"
    say(line)
    if err is not None:
        raise err
    assert ok, line


# --------------------------------------------------------------------------- 1


def check_library_integrity() -> str:
    with contextlib.redirect_stdout(io.StringIO()) as out:
        code = main(["validate"])
    assert code == 0, out.getvalue()
    lib = load_library(BUNDLED_LIBRARY)
    apps = {s.application for s in lib.skills.values() if not s.is_basic}
    n_basic = len(basic_skill_set(lib))
    assert len(lib.skills) >= 40 and len(apps) >= 3 and n_basic >= 7

    mutations = {
        "no_terminal": ("edge/EdgeLaunch.skill", "node s1 terminal", "node s1"),
        "unbound_placeholder": ("edge/EdgeSearch.skill", 'arg query open text(1,40) "search terms"\n', ""),
        "missing_skill": ("composition.txt", "\nentry EdgeOpenHomePage", "\nentry EdgeOpenHomePage\ncompose EdgeSearch -> EdgeTeleport"),
    }
    for code_name, (rel, old, new) in mutations.items():
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp) / "library"
            for src in BUNDLED_LIBRARY.rglob("*"):
                if src.is_file() and src.suffix in (".skill", ".txt"):
                    dst = root / src.relative_to(BUNDLED_LIBRARY)
                    dst.parent.mkdir(parents=True, exist_ok=True)
                    dst.write_text(src.read_text())
            p = root / rel
            text = p.read_text()
            assert old in text, (rel, old)
            p.write_text(text.replace(old, new, 1))
            with pytest.raises(LibraryError) as exc:
                load_library(root)
            codes = {i.split(":")[0] for i in exc.value.issues}
            assert codes == {code_name}, (code_name, exc.value.issues)
            if code_name != "unbound_placeholder":
                assert len(exc.value.issues) == 1, exc.value.issues
    return f"{len(lib.skills)} skills, {len(apps)} apps, {n_basic} basic; 3 mutations caught"


def test_criterion_1_library_integrity(say):
    _report(say, 1, "library integrity", 5, check_library_integrity)


# --------------------------------------------------------------------------- 2


def _weighted(cs, node) -> bool:
    return any(e.weight is not None for e in cs.resolved_graph.edges if e.src == node)


@contextlib.contextmanager
def gc_paused():
    # the runs allocate only acyclic garbage; skipping cycle scans of the whole test heap saves ~25%
    gc.disable()
    try:
        yield
    finally:
        gc.enable()
        gc.collect()


def check_executor_semantics(runs: int = 10_000) -> str:
    with gc_paused():
        return _executor_semantics(runs)


def _executor_semantics(runs: int) -> str:
    lib = load_library(BUNDLED_LIBRARY)
    worst = 0.0
    checked = 0
    n_weighted = 0
    for case in FIXTURE_BRANCHES:
        modes = ["uniform"]
        spec_cs = branch_frequencies(lib, case, 1)[1]
        if _weighted(spec_cs, case.node):
            modes.append("weighted")
            n_weighted += 1
        paths = set(enumerate_paths(spec_cs.resolved_graph, 64))
        for mode in modes:
            freqs, cs, sequences, _ = branch_frequencies(lib, case, runs, mode)
            want = expected_shares(cs, case.node, mode)
            assert len(want) >= 2, (case.skill, case.node)
            for i, share in want.items():
                dev = abs(freqs[i] - share)
                worst = max(worst, dev)
                assert dev <= 0.02, (case.skill, mode, i, freqs[i], share)
            for seq in sequences:
                assert seq in paths, (case.skill, seq)
            checked += sum(sequences.values())
        # byte-exact determinism: same seeds, same primitives and observation digests
        a = branch_frequencies(lib, case, 200, seed0=7, keep_traces=True)[3]
        b = branch_frequencies(lib, case, 200, seed0=7, keep_traces=True)[3]
        ser = lambda ts: "\n".join(f"{s.primitive.describe()}|{s.digest}" for t in ts for s in t.steps).encode()
        assert ser(a) == ser(b), case.skill
    return (f"{len(FIXTURE_BRANCHES)} branches ({n_weighted} weighted), {checked} traces on enumerated paths, "
            f"max share deviation {100 * worst:.2f} pts")


def test_criterion_2_executor_semantics(say):
    _report(say, 2, "executor semantics", 30, check_executor_semantics)


# --------------------------------------------------------------------------- 3


def check_synthesis(tmp: Path) -> str:
    lib = load_library(BUNDLED_LIBRARY)
    tasks = synthesize_tasks(lib, 1000, seed=42)
    failed = [t.id for t in tasks if not replay_task(lib, t, DesktopSim()).passed]
    assert not failed, failed[:5]
    path = tmp / "tasks.jsonl"
    assert export_dataset(tasks, path) == 1000
    assert load_dataset(path) == tasks
    lengths = [len(t.gold_sequence) for t in tasks]
    return f"1000/1000 replayed, round trip equal, path lengths {min(lengths)}-{max(lengths)}"


def test_criterion_3_task_synthesis(say, tmp_path):
    _report(say, 3, "task synthesis executability", 60, lambda: check_synthesis(tmp_path))


# --------------------------------------------------------------------------- 4


def check_worked_example() -> str:
    lib = load_library(BUNDLED_LIBRARY)
    task = calc_task(lib)
    assert task.instruction == "Calculate 398−174×√505"
    assert list(task.skill_ids) == [
        "CalculatorLaunch", "CalculatorSwitchMode", "CalculatorEnterNumber", "CalculatorSubtract",
        "CalculatorEnterNumber", "CalculatorMultiply", "CalculatorSquareRoot", "CalculatorEquals",
    ]
    want = 398 - 174 * math.sqrt(505)
    env = DesktopSim()
    res = run_task(lib, build_index(lib), task, "gold", AgentConfig(), env)
    assert res.ok, res.detail
    display = env.observe().apps["SimCalculator"].vars["display"]
    assert abs(display - want) < 1e-9 and abs(display - (-3512.1637)) <= 1e-4, display
    return f"8-skill gold sequence, display {display:.4f}"


def test_criterion_4_worked_example(say):
    _report(say, 4, "calculator worked example", 10, check_worked_example)


# --------------------------------------------------------------------------- 5


def check_retrieval() -> str:
    lib = load_library(BUNDLED_LIBRARY)
    index = build_index(lib)
    misses = [sid for sid in lib.skills if hybrid_retrieve(index, [sid])[0].skill_id != sid]
    assert not misses, misses
    recall, n = recall_at_10(index)
    assert n == 20
    assert recall["hybrid"] >= recall["lexical"] and recall["hybrid"] >= recall["semantic"], recall
    suite = json.loads((DATA / "retrieval_queries.json").read_text())
    ensemble = next(c for c in suite if len(c["queries"]) == 3)
    assert ensemble["expected"] in {r.skill_id for r in hybrid_retrieve(index, ensemble["queries"], 5)}

    docs = {sid: tokenize(index.texts[sid]) for sid in index.ids}
    worst = 0.0
    queries = [q for c in suite for q in c["queries"]] + list(lib.skills)
    for q in queries:
        terms = tokenize(q)
        for sid in index.ids:
            worst = max(worst, abs(bm25_score(index, terms, sid) - oracle_bm25(docs, terms, sid)))
        for sid, score in lexical_search(index, q, 5):
            assert score > 0
    assert worst <= 1e-9, worst
    return (f"recall@1 {len(lib.skills)}/{len(lib.skills)}; recall@10 hybrid {recall['hybrid']:.2f} "
            f"lexical {recall['lexical']:.2f} semantic {recall['semantic']:.2f}; bm25 max error {worst:.1e}")


def test_criterion_5_retrieval(say):
    _report(say, 5, "retrieval quality", 30, check_retrieval)


# --------------------------------------------------------------------------- 6


def check_agent_loop(tmp: Path) -> str:
    with contextlib.redirect_stdout(io.StringIO()) as out:
        assert main(["synth", "--count", "1000", "--seed", "42", "--out", str(tmp)]) == 0
        code = main(["run", "--dataset", str(tmp / "tasks.jsonl"), "--out", str(tmp)])
    last = out.getvalue().strip().splitlines()[-1]
    assert code == 0 and last == "success_rate=100.0% (1000/1000)", last

    lib = load_library(BUNDLED_LIBRARY)
    n_basic = len(basic_skill_set(lib))
    audited = 0
    for p in sorted((tmp / "transcripts").glob("*.jsonl")):
        records = [json.loads(x) for x in p.read_text().splitlines()]
        assert audit_transcript(records, n_basic) == [], p.name
        audited += 1
    assert audited == 1000

    index = build_index(lib)
    cases = build_fault_suite(lib, 40, seed=42)
    recovered = 0
    for case in cases:
        env = case.env()
        res = run_task(lib, index, case.task, "scripted", AgentConfig(), env)
        assert env.injected == 1, case.task.id
        assert audit_transcript(res.transcript, n_basic) == [], case.task.id
        recovered += res.ok and len(res.memory.failures()) == 1
    rate = recovered / len(cases)
    assert rate >= 0.95, rate
    return f"gold 1000/1000, fault suite {recovered}/{len(cases)} recovered, {audited + len(cases)} transcripts audited"


def test_criterion_6_agent_loop(say, tmp_path):
    _report(say, 6, "agent loop conformance", 120, lambda: check_agent_loop(tmp_path))


# --------------------------------------------------------------------------- 7


def check_simulator() -> str:
    restores = sum(check_interleavings(app, 100) for app in sorted(APPS))
    check_replay_determinism(1000)
    return f"{len(APPS)} apps x 100 interleavings ({restores} restores), 1000 sequences replayed"


def test_criterion_7_simulator_soundness(say):
    _report(say, 7, "simulator soundness", 60, check_simulator)


# --------------------------------------------------------------------------- 8


def test_criterion_8_full_suite(say, tmp_path):
    def check() -> str:
        runners = {
            1: check_library_integrity, 2: check_executor_semantics, 3: lambda: check_synthesis(tmp_path / "c3"),
            4: check_worked_example, 5: check_retrieval, 6: lambda: check_agent_loop(tmp_path / "c6"),
            7: check_simulator,
        }
        total = 0.0
        for n, fn in runners.items():
            if n not in RESULTS:  # run on its own, e.g. with -k
                (tmp_path / f"c{n}").mkdir(exist_ok=True)
                t0 = time.perf_counter()
                fn()
                RESULTS[n] = (True, time.perf_counter() - t0)
            ok, took = RESULTS[n]
            assert ok, f"criterion {n} failed"
            total += took
        assert total < 300, total
        assert not NETWORK_ATTEMPTS, NETWORK_ATTEMPTS
        return f"criteria 1-7 in {total:.1f}s, no network access"

    _report(say, 8, "full suite offline", 300, check)


if __name__ == "__main__":
    # a fresh interpreter so pytest can rewrite asserts in modules imported above
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", __file__, "-q", "-p", "no:cacheprovider"]))
