import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillgraph.model import (
    LibraryError,
    SkillLibrary,
    SkillSyntaxError,
    library_stats,
    load_library,
    parse_skill,
    primitive_count,
    serialize_skill,
    substitute,
    unescape,
    validate_skill,
)

from conftest import GOLDEN

MINIMAL = """\
skill Tiny
app SimCalculator
intent "Do one thing"
node s0 start
node s1 terminal
edge s0 -> s1 action press_key(key=enter)
"""


def codes(spec):
    return [v.code for v in validate_skill(spec)]


def test_fixture_shape(lib):
    assert len(lib.skills) >= 40
    apps = {s.application for s in lib.skills.values() if not s.is_basic}
    assert len(apps) >= 3
    assert sum(s.is_basic for s in lib.skills.values()) >= 7


def test_fixture_skills_validate(lib):
    for spec in lib.skills.values():
        assert validate_skill(spec) == [], spec.id


def test_minimal_skill_parses():
    s = parse_skill(MINIMAL)
    assert s.id == "Tiny"
    assert s.graph.start == "s0"
    assert s.graph.terminals == ("s1",)
    assert validate_skill(s) == []
    assert primitive_count(s) == 1


def test_round_trip_every_fixture(lib):
    for spec in lib.skills.values():
        again = parse_skill(serialize_skill(spec))
        assert again == spec, spec.id
        assert serialize_skill(again) == serialize_skill(spec)


def test_syntax_error_reports_position():
    text = MINIMAL.replace("edge s0 -> s1 action press_key(key=enter)", "edge s0 -> s1 actoin press_key(key=enter)")
    with pytest.raises(SkillSyntaxError) as exc:
        parse_skill(text, "tiny.skill")
    assert exc.value.line == 6
    assert "tiny.skill:6:" in str(exc.value)


def test_unknown_keyword_rejected():
    with pytest.raises(SkillSyntaxError) as exc:
        parse_skill(MINIMAL + "colour blue\n")
    assert exc.value.line == 7


def test_no_start_node():
    assert codes(parse_skill(MINIMAL.replace("node s0 start", "node s0"))) == ["no_start"]


def test_no_terminal_node():
    assert "no_terminal" in codes(parse_skill(MINIMAL.replace("node s1 terminal", "node s1")))


def test_unbound_placeholder():
    text = MINIMAL.replace("press_key(key=enter)", "type_text(text={missing}, input_mode=keyboard)")
    assert codes(parse_skill(text)) == ["unbound_placeholder"]


def test_unreachable_terminal():
    text = MINIMAL + "node s2 terminal\n"
    assert codes(parse_skill(text)) == ["unreachable_terminal"]


def test_empty_finite_domain():
    text = MINIMAL.replace('intent "Do one thing"', 'intent "Do one thing"\narg x finite{} "nothing"')
    assert "empty_domain" in codes(parse_skill(text))


def test_bad_weight_and_edge_from_terminal():
    text = MINIMAL + "node s2\nedge s1 -> s2 action wait(ms=1) weight -1.0\n"
    got = codes(parse_skill(text))
    assert "edge_from_terminal" in got
    assert "bad_weight" in got


def test_missing_action_param():
    text = MINIMAL.replace("press_key(key=enter)", "press_key()")
    assert codes(parse_skill(text)) == ["missing_action_param"]


def test_bad_input_mode():
    text = MINIMAL.replace("press_key(key=enter)", "type_text(text=hi, input_mode=telepathy)")
    assert codes(parse_skill(text)) == ["bad_input_mode"]


def test_placeholder_escapes():
    assert substitute("{a}-{{a}}", {"a": "x"}) == "x-{{a}}"
    assert unescape(substitute("{a}-{{a}}", {"a": "x"})) == "x-{a}"
    # an inserted value that itself looks like a placeholder stays literal
    assert unescape(substitute("{a}", {"a": "{b}"})) == "{b}"


def test_load_library_mutation_remove_terminal(lib_copy):
    p = lib_copy / "edge" / "EdgeLaunch.skill"
    p.write_text(p.read_text().replace("node s1 terminal", "node s1"))
    with pytest.raises(LibraryError) as exc:
        load_library(lib_copy)
    assert [i.split(":")[0] for i in exc.value.issues] == ["no_terminal"]


def test_load_library_mutation_unbind_placeholder(lib_copy):
    p = lib_copy / "edge" / "EdgeSearch.skill"
    p.write_text(p.read_text().replace('arg query open text(1,40) "search terms"\n', ""))
    with pytest.raises(LibraryError) as exc:
        load_library(lib_copy)
    assert {i.split(":")[0] for i in exc.value.issues} == {"unbound_placeholder"}


def test_load_library_mutation_break_composition(lib_copy):
    p = lib_copy / "composition.txt"
    p.write_text(p.read_text() + "compose EdgeSearch -> EdgeTeleport\n")
    with pytest.raises(LibraryError) as exc:
        load_library(lib_copy)
    assert len(exc.value.issues) == 1
    assert exc.value.issues[0].startswith("missing_skill:")


def test_duplicate_skill_id_names_both_files(lib_copy):
    src = lib_copy / "edge" / "EdgeLaunch.skill"
    (lib_copy / "edge" / "Copy.skill").write_text(src.read_text())
    with pytest.raises(LibraryError) as exc:
        load_library(lib_copy)
    (issue,) = exc.value.issues
    assert issue.startswith("duplicate_skill_id")
    assert "EdgeLaunch.skill" in issue and "Copy.skill" in issue


def test_empty_library(tmp_path):
    lib = load_library(tmp_path)
    assert lib.skills == {}
    assert library_stats(lib).format() == ""


def test_composition_scope(lib):
    scopes = {(e.src, e.dst): e.scope for e in lib.composition.edges}
    assert scopes[("CalculatorLaunch", "CalculatorSwitchMode")] == "single_app"
    assert scopes[("CalculatorEquals", "EditorLaunch")] == "cross_app"
    # workbook skills live in the file explorer application
    assert scopes[("FilesLaunch", "ExcelOpenExistingWorkbook")] == "single_app"


def test_calculator_expression_chain_is_in_composition(lib):
    chain = ["CalculatorLaunch", "CalculatorSwitchMode", "CalculatorEnterNumber", "CalculatorSubtract",
             "CalculatorEnterNumber", "CalculatorMultiply", "CalculatorSquareRoot", "CalculatorEquals"]
    assert all(lib.composition.has_edge(a, b) for a, b in zip(chain, chain[1:]))


def test_stats_match_golden_table(lib):
    assert library_stats(lib).format() == (GOLDEN / "fixture_stats.txt").read_text()


def test_stats_match_pinned_oracle_counts(lib):
    pinned = json.loads((GOLDEN / "fixture_counts.json").read_text())
    assert {sid: primitive_count(s) for sid, s in lib.skills.items()} == pinned["counts"]
    table = library_stats(lib)
    for row in table.rows:
        want = pinned["apps"][row.application]
        assert row.count == want["count"]
        assert row.mean == pytest.approx(want["mean"], abs=1e-12)
        assert row.std == pytest.approx(want["std"], abs=1e-12)
        assert (row.lo, row.hi) == (want["min"], want["max"])


def test_basic_only_library_stats(lib):
    basic = {sid: s for sid, s in lib.skills.items() if s.is_basic}
    table = library_stats(SkillLibrary(basic))
    assert [r.application for r in table.rows] == ["Basic"]
    assert "1.00 ± 0.00" in table.total.format()


def test_guard_only_skill_uses_fallback_count(lib):
    # both first-hop edges are guarded, so the count comes from the longest path overall
    assert primitive_count(lib.skills["EdgeOpenHomePage"]) == 2


# --------------------------------------------------------------------------- properties

_names = st.sampled_from(["alpha", "beta", "gamma_2", "x"])
_steps = st.lists(
    st.sampled_from(
        [
            "press_key(key=enter)",
            "hotkey(keys=[ctrl,shift,n])",
            "single_click(target=\"Open Navigation\")",
            "type_text(text={alpha}, input_mode=copy_paste)",
            "wait(ms=250)",
            "launch_app(app=SimEdge)",
            "script(command=\"mkdir {alpha}\")",
        ]
    ),
    min_size=1,
    max_size=6,
)


@settings(max_examples=80, deadline=None)
@given(_steps, st.lists(st.floats(min_value=0.1, max_value=9.0), min_size=6, max_size=6), _names)
def test_round_trip_generated_linear_skills(steps, weights, name):
    lines = [f"skill Gen{name.capitalize().replace('_', '')}", "app SimEdge", 'intent "generated"',
             'arg alpha open text(1,8) "a"']
    lines += [f"node n{i}" + (" start" if i == 0 else "") + (" terminal" if i == len(steps) else "")
              for i in range(len(steps) + 1)]
    lines += [f"edge n{i} -> n{i + 1} action {a} weight {weights[i]!r}" for i, a in enumerate(steps)]
    spec = parse_skill("\n".join(lines) + "\n")
    assert validate_skill(spec) == []
    assert parse_skill(serialize_skill(spec)) == spec
    assert primitive_count(spec) == len(steps)
