"""Task synthesis: walk the composition graph, bind arguments, render an
instruction, and derive a mechanical goal check from skill effects."""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ._rng import SplitMix64, mix_seed
from .arguments import ArgumentBinding, instantiate, sample_binding, validate_binding
from .executor import ExecutionTrace, TraversalPolicy, execute_skill
from .model import CompositionGraph, SkillLibrary, placeholders, unescape
from .sim.env import DesktopSim
from .sim.state import GoalCheck, GoalResult, check_goal

MAX_PATH_LENGTH = 12


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthTask:
    id: str
    instruction: str
    gold_sequence: tuple[tuple[str, ArgumentBinding], ...]
    goal: GoalCheck
    seed: int
    domain: str = ""

    @property
    def skill_ids(self) -> tuple[str, ...]:
        return tuple(sid for sid, _ in self.gold_sequence)


# --------------------------------------------------------------------------- paths


def _starts(cg: CompositionGraph) -> tuple[str, ...]:
    return cg.entries if cg.entries else cg.nodes


def sample_path(cg: CompositionGraph, length: tuple[int, int] | int, seed: int) -> list[str]:
    """Random walk along composition edges beginning at an entry skill.

    The length is drawn uniformly from the feasible lengths in ``length``;
    every step picks uniformly among successors that can still complete the walk.
    """
    lo, hi = (length, length) if isinstance(length, int) else length
    if not 1 <= lo <= hi <= MAX_PATH_LENGTH:
        raise SynthError(f"path length range must lie within [1, {MAX_PATH_LENGTH}], got [{lo}, {hi}]")
    if not cg.nodes:
        raise SynthError("empty composition graph")

    # can[n][v]: a walk of exactly n skills starting at v exists
    can: list[set[str]] = [set(), set(cg.nodes)]
    for n in range(2, hi + 1):
        can.append({v for v in cg.nodes if any(w in can[n - 1] for w in cg.successors(v))})

    starts = _starts(cg)
    feasible = [n for n in range(lo, hi + 1) if any(s in can[n] for s in starts)]
    if not feasible:
        raise SynthError(f"no walk with length in [{lo}, {hi}] starts at an entry skill")

    rng = SplitMix64(mix_seed(seed, "path"))
    n = rng.choice(feasible)
    node = rng.choice([s for s in starts if s in can[n]])
    path = [node]
    for remaining in range(n - 1, 0, -1):
        node = rng.choice([w for w in cg.successors(node) if w in can[remaining]])
        path.append(node)
    return path


def is_walk(cg: CompositionGraph, path: Sequence[str]) -> bool:
    if not path or path[0] not in _starts(cg):
        return False
    return all(cg.has_edge(a, b) for a, b in zip(path, path[1:]))


# --------------------------------------------------------------------------- derived values

_OPS = {"CalculatorAdd": "+", "CalculatorSubtract": "-", "CalculatorMultiply": "*", "CalculatorDivide": "/"}
_PRETTY = {"+": "+", "-": "−", "*": "×", "/": "÷"}


class _CalcTracker:
    """Follows what a calculator sequence computes, independently of the simulator.

    Scientific mode uses ordinary precedence; the other modes evaluate
    immediately from left to right, which the rendered text shows with
    parentheses.
    """

    def __init__(self):
        self.mode = "standard"
        self.reset()

    def reset(self):
        self.py = ""
        self.text = ""
        self.has_low = False  # a top-level + or - in the accumulated text
        self.pending = None

    def operand(self, py: str, text: str):
        if self.pending is None:
            self.py, self.text, self.has_low = py, text, False
            return
        op = self.pending
        if self.mode == "scientific":
            self.py = f"{self.py}{op}{py}"
            self.text = f"{self.text}{_PRETTY[op]}{text}"
        else:
            self.py = f"({self.py}){op}{py}"
            left = f"({self.text})" if self.has_low and op in "*/" else self.text
            self.text = f"{left}{_PRETTY[op]}{text}"
        self.has_low = op in "+-"
        self.pending = None

    def evaluate(self) -> float:
        return float(eval(self.py, {"__builtins__": {}}, {"sqrt": math.sqrt}))  # noqa: S307 - text built above


def derived_values(path: Sequence[str], bindings: Sequence[ArgumentBinding]) -> list[dict[str, str]]:
    """Values each step's effect may reference beyond its own arguments."""
    calc = _CalcTracker()
    out: list[dict[str, str]] = []
    for sid, b in zip(path, bindings):
        extra: dict[str, str] = {}
        if sid == "CalculatorLaunch" or sid == "CalculatorClear":
            calc.reset()
        elif sid == "CalculatorSwitchMode":
            calc.mode = b.values["mode_name"]
            calc.reset()
        elif sid == "CalculatorEnterNumber":
            n = b.values["number"]
            calc.operand(repr(float(n)), n)
        elif sid == "CalculatorSquareRoot":
            n = b.values["number"]
            calc.operand(f"sqrt({float(n)!r})", f"√{n}")
        elif sid in _OPS:
            calc.pending = _OPS[sid]
        elif sid == "CalculatorEquals":
            extra = {"result": repr(calc.evaluate()), "expr": calc.text}
            calc.reset()
        out.append(extra)
    return out


# --------------------------------------------------------------------------- instructions


@dataclass(frozen=True)
class InstructionTemplate:
    """``signature`` is a regex matched against the space-joined skill ids of
    one application run; ``pattern`` placeholders are ``{Skill.arg}`` or
    ``{derived_name}``."""

    signature: str
    pattern: str

    def matches(self, ids: Sequence[str]) -> bool:
        return re.fullmatch(self.signature, " ".join(ids)) is not None


_OPERAND = "(?:CalculatorEnterNumber|CalculatorSquareRoot)"
_OPERATOR = "(?:CalculatorAdd|CalculatorSubtract|CalculatorMultiply|CalculatorDivide)"

TEMPLATES: tuple[InstructionTemplate, ...] = (
    InstructionTemplate(
        rf"CalculatorLaunch(?: CalculatorSwitchMode)?(?: {_OPERAND} {_OPERATOR})* {_OPERAND} CalculatorEquals",
        "Calculate {expr}",
    ),
    InstructionTemplate(
        "FilesLaunch FilesCreateFolder",
        "Create a new folder named '{FilesCreateFolder.folder_name}' inside {FilesCreateFolder.parent}",
    ),
    InstructionTemplate(
        "FilesLaunch FilesCreateFolderViaRibbon",
        "Use the ribbon to create a folder named '{FilesCreateFolderViaRibbon.folder_name}'"
        " inside {FilesCreateFolderViaRibbon.parent}",
    ),
    InstructionTemplate(
        "FilesLaunch FilesCreateTextFile",
        "Create an empty text file called {FilesCreateTextFile.file_name} in {FilesCreateTextFile.parent}",
    ),
    InstructionTemplate(
        "FilesLaunch FilesNavigate",
        "Open the {FilesNavigate.folder} folder in the file explorer",
    ),
    InstructionTemplate(
        "FilesLaunch ExcelOpenExistingWorkbook ExcelRenameSheet",
        "Open the '{ExcelOpenExistingWorkbook.file_path}' file and rename the"
        " {ExcelRenameSheet.target_sheet_name} as {ExcelRenameSheet.new_sheet_name}",
    ),
    InstructionTemplate(
        "EditorLaunch EditorSetText EditorSaveAs",
        "Write '{EditorSetText.text}' in the text editor and save it as {EditorSaveAs.file_name}",
    ),
    InstructionTemplate(
        "EditorLaunch EditorSetText",
        "Replace the text editor's contents with '{EditorSetText.text}'",
    ),
    InstructionTemplate(
        "EditorLaunch EditorSetTheme",
        "Switch the text editor to the {EditorSetTheme.theme} theme",
    ),
    InstructionTemplate(
        "EdgeLaunch EdgeSearch",
        "Search the web for '{EdgeSearch.query}' in Edge",
    ),
    InstructionTemplate(
        "EdgeOpenHomePage EdgeSearch",
        "Open the home page in Edge, then search for '{EdgeSearch.query}'",
    ),
    InstructionTemplate(
        "EdgeLaunch EdgeNavigate",
        "Visit the {EdgeNavigate.site} site in Edge",
    ),
)


_TEMPLATE_SLOT = re.compile(r"\{([A-Za-z_][\w.]*)\}")


def _render(pattern: str, ctx: Mapping[str, str]) -> str | None:
    if any(n not in ctx for n in _TEMPLATE_SLOT.findall(pattern)):
        return None
    return _TEMPLATE_SLOT.sub(lambda m: ctx[m.group(1)], pattern)


def _fallback_phrase(lib: SkillLibrary, sid: str, b: ArgumentBinding) -> str:
    spec = lib.skills[sid]
    text = spec.intent or sid
    if spec.arguments:
        text += " (" + ", ".join(f"{a.name}={b.values[a.name]}" for a in spec.arguments) + ")"
    return text


def _lower_first(s: str) -> str:
    return s[:1].lower() + s[1:] if s and not s[:2].isupper() else s


def render_instruction(
    lib: SkillLibrary,
    path: Sequence[str],
    bindings: Sequence[ArgumentBinding],
    derived: Sequence[Mapping[str, str]],
    templates: Sequence[InstructionTemplate] = TEMPLATES,
) -> str:
    """Render per application run; runs without a matching template fall back
    to one sentence per skill intent."""
    phrases: list[str] = []
    i = 0
    while i < len(path):
        app = lib.skills[path[i]].application
        j = i
        while j < len(path) and lib.skills[path[j]].application == app:
            j += 1
        ids = path[i:j]
        ctx: dict[str, str] = {}
        for sid, b, d in zip(ids, bindings[i:j], derived[i:j]):
            ctx.update({f"{sid}.{k}": v for k, v in b.values.items()})
            ctx.update(d)
        text = None
        for t in templates:
            if t.matches(ids):
                text = _render(t.pattern, ctx)
                if text is not None:
                    break
        if text is None:
            phrases.extend(_fallback_phrase(lib, sid, b) for sid, b in zip(ids, bindings[i:j]))
        else:
            phrases.append(text)
        i = j
    return ". Then ".join([phrases[0]] + [_lower_first(p) for p in phrases[1:]])


# --------------------------------------------------------------------------- tasks


def domain_of(lib: SkillLibrary, path: Sequence[str]) -> str:
    apps: list[str] = []
    for sid in path:
        app = lib.skills[sid].application
        name = app[3:] if app.startswith("Sim") else app
        if name not in apps:
            apps.append(name)
    return "+".join(apps)


def derive_goal(lib: SkillLibrary, sid: str, values: Mapping[str, str]) -> GoalCheck:
    spec = lib.skills[sid]
    if not spec.effects:
        raise SynthError(f"{sid} has no effect annotation, cannot derive a goal")
    out = []
    for eff in spec.effects:
        missing = [n for n in placeholders(eff.target) + placeholders(eff.literal or "") if n not in values]
        if missing:
            raise SynthError(f"{sid}: effect needs unresolved values {missing}")
        g = eff.substitute(dict(values))
        out.append((unescape(g.target), unescape(g.literal or "")))
    return GoalCheck(tuple(out))


def synthesize_task(
    lib: SkillLibrary,
    path: Sequence[str],
    seed: int,
    bindings: Sequence[Mapping[str, str] | None] | None = None,
    task_id: str | None = None,
    templates: Sequence[InstructionTemplate] = TEMPLATES,
) -> SynthTask:
    """Bind every step, render the instruction, and derive the goal.

    ``bindings`` optionally pins argument values for chosen positions; the
    rest are sampled from the feasible domains.
    """
    if not path:
        raise SynthError("empty path")
    for sid in path:
        if sid not in lib.skills:
            raise SynthError(f"unknown skill {sid!r}")
    if not is_walk(lib.composition, path):
        raise SynthError("path is not a walk from an entry skill in the composition graph")

    bound: list[ArgumentBinding] = []
    for i, sid in enumerate(path):
        fixed = bindings[i] if bindings is not None and i < len(bindings) else None
        b = ArgumentBinding(sid, dict(fixed)) if fixed is not None else sample_binding(lib.skills[sid], mix_seed(seed, i))
        report = validate_binding(lib, b)
        if report:
            raise SynthError(f"step {i} ({sid}): invalid binding {report}")
        bound.append(b)

    derived = derived_values(path, bound)
    instruction = render_instruction(lib, path, bound, derived, templates)
    goal = derive_goal(lib, path[-1], {**bound[-1].values, **derived[-1]})
    return SynthTask(
        id=task_id or f"task-{seed:016x}",
        instruction=instruction,
        gold_sequence=tuple(zip(path, bound)),
        goal=goal,
        seed=seed,
        domain=domain_of(lib, path),
    )


def _synth_one(args) -> SynthTask:
    lib, seed, i, length = args
    s = mix_seed(seed, i)
    path = sample_path(lib.composition, length, s)
    return synthesize_task(lib, path, s, task_id=f"task-{seed}-{i:05d}")


def synthesize_tasks(
    lib: SkillLibrary, count: int, seed: int = 42, length: tuple[int, int] = (1, 8), jobs: int = 1
) -> list[SynthTask]:
    work = [(lib, seed, i, length) for i in range(count)]
    if jobs <= 1 or count < 64:
        return [_synth_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_synth_one, work, chunksize=64))


def validate_task(lib: SkillLibrary, task: SynthTask) -> list[str]:
    issues = []
    ids = task.skill_ids
    if any(sid not in lib.skills for sid in ids):
        return [f"unknown_skill: {sid}" for sid in ids if sid not in lib.skills]
    if not is_walk(lib.composition, ids):
        issues.append("not_a_walk")
    for i, (sid, b) in enumerate(task.gold_sequence):
        if b.skill_id != sid:
            issues.append(f"step {i}: binding for {b.skill_id}")
        issues.extend(f"step {i}: {r}" for r in validate_binding(lib, b))
    if not task.goal.assertions:
        issues.append("empty_goal")
    return issues


@dataclass
class ReplayResult:
    goal: GoalResult
    traces: list[ExecutionTrace]

    @property
    def passed(self) -> bool:
        return self.goal.passed and all(t.outcome.ok for t in self.traces)


def replay_task(lib: SkillLibrary, task: SynthTask, env=None, mode: str = "uniform") -> ReplayResult:
    """Execute the gold sequence on a fresh simulator and check the goal."""
    env = env if env is not None else DesktopSim()
    traces = []
    for i, (sid, b) in enumerate(task.gold_sequence):
        t = execute_skill(instantiate(lib.skills[sid], b), env, TraversalPolicy(mode, mix_seed(task.seed, i)))
        traces.append(t)
        if not t.outcome.ok:
            return ReplayResult(GoalResult(False, (f"step {i} {sid}: {t.outcome.status} {t.outcome.detail}",)), traces)
    return ReplayResult(check_goal(task.goal, env.observe()), traces)


# --------------------------------------------------------------------------- dataset files


def task_to_record(task: SynthTask) -> dict:
    return {
        "id": task.id,
        "domain": task.domain,
        "instruction": task.instruction,
        "steps": [{"skill": sid, "args": dict(sorted(b.values.items()))} for sid, b in task.gold_sequence],
        "goal": task.goal.to_json(),
        "seed": task.seed,
    }


def task_from_record(rec: Mapping) -> SynthTask:
    return SynthTask(
        id=rec["id"],
        instruction=rec["instruction"],
        gold_sequence=tuple((s["skill"], ArgumentBinding(s["skill"], dict(s["args"]))) for s in rec["steps"]),
        goal=GoalCheck.from_json(rec["goal"]),
        seed=int(rec["seed"]),
        domain=rec.get("domain", ""),
    )


def export_dataset(tasks: Sequence[SynthTask], path: str | Path) -> int:
    """Write one JSON record per line; returns the number of records."""
    lines = [json.dumps(task_to_record(t), ensure_ascii=False) for t in tasks]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def load_dataset(path: str | Path) -> list[SynthTask]:
    out = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(task_from_record(json.loads(line)))
        except (KeyError, TypeError, ValueError) as e:
            raise SynthError(f"{path}:{n}: bad record: {e}") from e
    return out
