import copy
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
import threading

import pytest

from skillgraph.agent import (
    CONFIG_ERROR,
    DONE,
    FAIL,
    AgentConfig,
    EpisodeMemory,
    PlannerContractError,
    ScriptedPlanner,
    WirePlanner,
    audit_transcript,
    basic_skill_set,
    build_fault_suite,
    default_summary,
    run_episode,
    run_task,
    update_memory,
    write_transcript,
)
from skillgraph.arguments import ArgumentBinding, instantiate
from skillgraph.executor import ExecutionOutcome
from skillgraph.sim import DesktopSim, GoalCheck

from test_synth import calc_task


class StubPlanner:
    """Answers from fixed callables; records every candidate list it sees."""

    def __init__(self, queries=lambda mem: ["x"], choose=lambda cards, mem: DONE, args=lambda spec, mem: {}):
        self._queries, self._choose, self._args = queries, choose, args
        self.seen = []

    def generate_queries(self, instruction, observation, memory, k):
        return self._queries(memory)

    def rerank(self, candidates, observation, memory):
        self.seen.append([c.id for c in candidates])
        return self._choose(candidates, memory)

    def configure(self, skill, observation, memory):
        return self._args(skill, memory)

    def summarize(self, cs, outcome):
        return default_summary(cs, outcome)


def test_gold_planner_worked_example(lib, index):
    task = calc_task(lib)
    env = DesktopSim()
    res = run_task(lib, index, task, "gold", AgentConfig(), env)
    assert res.ok, res.detail
    assert res.steps == 8
    assert [r.skill_id for r in res.memory.records] == list(task.skill_ids)
    assert abs(env.observe().apps["SimCalculator"].vars["display"] - (-3512.1637)) <= 1e-4
    assert audit_transcript(res.transcript, 7) == []


def test_done_at_first_step(lib, index):
    res = run_episode("nothing to do", lib, index, DesktopSim(), StubPlanner())
    assert res.ok and res.steps == 0
    assert len(res.memory) == 1


def test_done_with_failed_goal(lib, index):
    goal = GoalCheck((("focused_app", "SimEdge"),))
    res = run_episode("open edge", lib, index, DesktopSim(), StubPlanner(), goal=goal)
    assert res.status == "fail"
    assert "focused_app" in res.detail


def test_memory_grows_by_one_record_per_skill(lib):
    spec = lib.skills["BasicWait"]
    cs = instantiate(spec, ArgumentBinding(spec.id, {}))
    mem = EpisodeMemory("wait a lot")
    for i in range(50):
        outcome = ExecutionOutcome("success" if i % 7 else "dead_end")
        mem = update_memory(mem, cs, outcome)
        assert len(mem) == i + 2
    assert [r.step for r in mem.records] == list(range(50))
    assert len(mem.failures()) == 8
    assert mem.tail()[-1]["step"] == 49


def test_basic_skills_always_offered(lib, index):
    basic = basic_skill_set(lib)
    assert len(basic) == 7
    planner = StubPlanner(queries=lambda mem: ["rename the worksheet"],
                          choose=lambda cards, mem: "BasicWait" if len(mem.records) < 3 else DONE)
    res = run_episode("rename", lib, index, DesktopSim(), planner, AgentConfig(skill_budget=2))
    assert res.ok and res.steps == 3
    for ids in planner.seen:
        assert set(basic) <= set(ids)
        assert len(ids) <= 2 + len(basic)
    assert audit_transcript(res.transcript, len(basic)) == []


def test_too_many_queries_is_a_contract_violation(lib, index):
    planner = StubPlanner(queries=lambda mem: ["a", "b", "c", "d"])
    with pytest.raises(PlannerContractError):
        run_episode("x", lib, index, DesktopSim(), planner, AgentConfig(query_budget=3))


def test_unpresented_choice_is_a_contract_violation(lib, index):
    planner = StubPlanner(queries=lambda mem: ["open the calculator"], choose=lambda cards, mem: "ExcelRenameSheet")
    with pytest.raises(PlannerContractError):
        run_episode("x", lib, index, DesktopSim(), planner, AgentConfig(skill_budget=1))


def test_invalid_binding_becomes_config_error(lib, index):
    planner = StubPlanner(
        queries=lambda mem: ["switch calculator mode"],
        choose=lambda cards, mem: "CalculatorSwitchMode" if not mem.records else FAIL,
        args=lambda spec, mem: {"mode_name": "astrology"},
    )
    res = run_episode("x", lib, index, DesktopSim(), planner)
    assert res.status == "fail"
    (rec,) = res.memory.records
    assert rec.status == CONFIG_ERROR and rec.failed
    assert "domain_violation:mode_name" in rec.summary
    assert res.traces == []


def test_step_budget_exhausted(lib, index):
    planner = StubPlanner(choose=lambda cards, mem: "BasicWait", args=lambda spec, mem: {"ms": "0"})
    res = run_episode("wait forever", lib, index, DesktopSim(), planner, AgentConfig(max_steps=4))
    assert res.status == "budget_exhausted" and res.steps == 4
    assert len(res.memory.records) == 4


def test_fault_suite_recovers_through_memory(lib, index, tmp_path):
    cases = build_fault_suite(lib, 10)
    for case in cases:
        env = case.env()
        res = run_task(lib, index, case.task, "scripted", AgentConfig(), env)
        assert res.ok, (case.task.instruction, res.detail)
        assert env.injected == 1
        failed = res.memory.failures()
        assert len(failed) == 1
        assert res.memory.records.index(failed[0]) < len(res.memory.records) - 1
        assert audit_transcript(res.transcript, 7) == []
    write_transcript(res, tmp_path / "t.jsonl", "fault")
    lines = [json.loads(x) for x in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert lines[0]["task"] == "fault" and lines[-1]["event"] == "end"


def test_audit_detects_tampering(lib, index):
    case = build_fault_suite(lib, 1)[0]
    res = run_task(lib, index, case.task, "scripted", AgentConfig(), case.env())
    records = res.transcript

    extra = copy.deepcopy(records)
    q = next(r for r in extra if r["event"] == "queries")
    q["queries"] = ["a", "b", "c", "d"]
    assert any("queries > K" in i for i in audit_transcript(extra, 7))

    hidden = copy.deepcopy(records)
    for r in hidden:
        if r["event"] == "rerank":
            r["memory_tail"] = [m for m in r["memory_tail"] if not m["failed"]]
    assert any("not visible" in i for i in audit_transcript(hidden, 7))

    crowded = copy.deepcopy(records)
    c = next(r for r in crowded if r["event"] == "candidates")
    c["ids"] = c["ids"] + [f"Extra{i}" for i in range(40)]
    assert any("candidates >" in i for i in audit_transcript(crowded, 7))


def test_scripted_planner_gives_up_on_unknown_instruction(lib, index):
    res = run_episode("play some music", lib, index, DesktopSim(), ScriptedPlanner())
    assert res.status == "fail" and res.steps == 0


def test_empty_instruction_rejected(lib, index):
    with pytest.raises(ValueError):
        run_episode("  ", lib, index, DesktopSim(), ScriptedPlanner())


# --------------------------------------------------------------------------- wire planner


def _serve_planner():
    calls = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            req = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            calls.append(req)
            call = req["call"]
            if call == "generate_queries":
                out = {"queries": ["open the text editor"][: req["k"]]}
            elif call == "rerank":
                ids = [c["id"] for c in req["candidates"]]
                out = {"choice": DONE if req["memory_tail"] else ("EditorLaunch" if "EditorLaunch" in ids else FAIL)}
            elif call == "configure":
                out = {"args": {}}
            else:
                out = {"summary": f"{req['skill']} -> {req['status']}"}
            body = json.dumps({"version": 1, **out}).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server, calls


def test_wire_planner_round_trip(lib, index):
    server, calls = _serve_planner()
    try:
        host, port = server.server_address[:2]
        goal = GoalCheck((("focused_app", "SimEditor"),))
        res = run_episode("Open the text editor", lib, index, DesktopSim(), WirePlanner(f"http://{host}:{port}/"),
                          goal=goal)
    finally:
        server.shutdown()
        server.server_close()
    assert res.ok and res.steps == 1
    assert res.memory.records[0].summary == "EditorLaunch -> success"
    assert [c["call"] for c in calls] == ["generate_queries", "rerank", "configure", "summarize",
                                         "generate_queries", "rerank"]
    assert all(c["version"] == 1 for c in calls)
    assert calls[-1]["memory_tail"][0]["skill"] == "EditorLaunch"


def test_wire_planner_unreachable(lib, index):
    with pytest.raises(PlannerContractError):
        run_episode("x", lib, index, DesktopSim(), WirePlanner("http://127.0.0.1:9/", timeout=0.5))
