import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillgraph.arguments import ArgumentBinding
from skillgraph.synth import (
    SynthError,
    derive_goal,
    derived_values,
    export_dataset,
    is_walk,
    load_dataset,
    replay_task,
    sample_path,
    synthesize_task,
    synthesize_tasks,
    task_from_record,
    task_to_record,
    validate_task,
)

CALC_CHAIN = [
    "CalculatorLaunch", "CalculatorSwitchMode", "CalculatorEnterNumber", "CalculatorSubtract",
    "CalculatorEnterNumber", "CalculatorMultiply", "CalculatorSquareRoot", "CalculatorEquals",
]
CALC_ARGS = [None, {"mode_name": "scientific"}, {"number": "398"}, None, {"number": "174"}, None, {"number": "505"}, None]


def calc_task(lib):
    return synthesize_task(lib, CALC_CHAIN, 1, CALC_ARGS)


def test_calculator_worked_example(lib):
    task = calc_task(lib)
    assert task.instruction == "Calculate 398−174×√505"
    assert list(task.skill_ids) == CALC_CHAIN
    assert task.gold_sequence[2][1].values == {"number": "398"}
    (path, want), = task.goal.assertions
    assert path == "SimCalculator.vars.display"
    assert float(want) == pytest.approx(398 - 174 * math.sqrt(505), abs=1e-9)
    res = replay_task(lib, task)
    assert res.passed
    display = res.traces[-1].steps[-1].state.apps["SimCalculator"].vars["display"]
    assert abs(display - (-3512.1637)) <= 1e-4


def test_left_to_right_modes_parenthesize():
    path = ["CalculatorLaunch", "CalculatorEnterNumber", "CalculatorAdd", "CalculatorEnterNumber",
            "CalculatorMultiply", "CalculatorEnterNumber", "CalculatorEquals"]
    b = [ArgumentBinding(s, v) for s, v in zip(path, [{}, {"number": "2"}, {}, {"number": "3"}, {}, {"number": "4"}, {}])]
    last = derived_values(path, b)[-1]
    assert float(last["result"]) == 20
    assert last["expr"] == "(2+3)×4"


def test_single_launch_task(lib):
    task = synthesize_task(lib, ["CalculatorLaunch"], 3)
    assert task.instruction == lib.skills["CalculatorLaunch"].intent
    assert task.goal.assertions == (("focused_app", "SimCalculator"),)
    assert replay_task(lib, task).passed


def test_sampled_paths_are_walks(lib):
    for seed in range(1000):
        path = sample_path(lib.composition, (1, 8), seed)
        assert 1 <= len(path) <= 8
        assert is_walk(lib.composition, path)


def test_sample_path_rejects_bad_lengths(lib):
    for bad in (0, (3, 2), (1, 99)):
        with pytest.raises(SynthError):
            sample_path(lib.composition, bad, 0)


def test_synthesize_rejects_non_walk(lib):
    with pytest.raises(SynthError):
        synthesize_task(lib, ["CalculatorEquals", "CalculatorLaunch"], 0)
    with pytest.raises(SynthError):
        synthesize_task(lib, ["CalculatorLaunch", "NoSuchSkill"], 0)
    with pytest.raises(SynthError):
        synthesize_task(lib, CALC_CHAIN[:3], 0, [None, {"mode_name": "astrology"}])


def test_unresolved_effect_value(lib):
    with pytest.raises(SynthError):
        derive_goal(lib, "ExcelRenameSheet", {"target_sheet_name": "sheet1"})


def test_synthesis_is_deterministic(lib, tmp_path):
    a = synthesize_tasks(lib, 50, seed=9)
    b = synthesize_tasks(lib, 50, seed=9)
    export_dataset(a, tmp_path / "a.jsonl")
    export_dataset(b, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert synthesize_tasks(lib, 50, seed=10) != a


def test_export_import_round_trip(lib, tmp_path):
    tasks = synthesize_tasks(lib, 100, seed=42)
    p = tmp_path / "tasks.jsonl"
    assert export_dataset(tasks, p) == 100
    assert load_dataset(p) == tasks
    assert all(validate_task(lib, t) == [] for t in tasks)


def test_empty_export(tmp_path):
    p = tmp_path / "none.jsonl"
    assert export_dataset([], p) == 0
    assert p.read_text() == ""
    assert load_dataset(p) == []


def test_bad_record_reports_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps({"id": "x"}) + "\n")
    with pytest.raises(SynthError, match="bad.jsonl:1"):
        load_dataset(p)


def test_validate_task_flags_tampering(lib):
    task = calc_task(lib)
    rec = task_to_record(task)
    rec["steps"][2]["args"]["number"] = "0"
    rec["steps"].reverse()
    issues = validate_task(lib, task_from_record(rec))
    assert "not_a_walk" in issues
    assert any("domain_violation:number" in i for i in issues)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**63), st.integers(min_value=1, max_value=8))
def test_synthesized_tasks_replay(lib, seed, n):
    path = sample_path(lib.composition, n, seed)
    task = synthesize_task(lib, path, seed)
    assert len(task.gold_sequence) == n
    assert validate_task(lib, task) == []
    assert task_from_record(json.loads(json.dumps(task_to_record(task)))) == task
    assert replay_task(lib, task).passed
