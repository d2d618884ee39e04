"""Skill schema, execution graphs, composition graph, and the skill file format.

A skill file is line oriented::

    skill CalculatorEnterNumber
    app SimCalculator
    intent "Type a number into the calculator"
    tag basic
    effect equals(SimCalculator.vars.entry, "{number}")
    arg number open int_range(1,999) "number to type"
    node s0 start
    node s1 terminal
    edge s0 -> s1 action type_text(text={number}, input_mode=keyboard) guard focused_app(SimCalculator) weight 2

Blank lines and ``#`` comments are ignored. The composition file holds
``compose <from> -> <to>`` and ``entry <skill>`` lines.
"""

from __future__ import annotations

import functools
import math
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .generators import (
    Generator,
    GeneratorError,
    parse_generator,
    quote,
    split_top_level,
    unquote,
)

ACTION_KINDS = ("launch_app", "single_click", "type_text", "hotkey", "press_key", "wait", "script")
REQUIRED_PARAMS = {
    "launch_app": ("app",),
    "single_click": ("target",),
    "type_text": ("text", "input_mode"),
    "hotkey": ("keys",),
    "press_key": ("key",),
    "wait": (),
    "script": ("command",),
}
INPUT_MODES = ("keyboard", "copy_paste")
GUARD_OPS = ("exists", "equals", "focused_app")

PLACEHOLDER = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NODE_ID = re.compile(r"[A-Za-z0-9_]+")
_BARE = re.compile(r"[A-Za-z0-9_.+@:{}\-]+")


def placeholders(text: str) -> list[str]:
    """Names of ``{name}`` placeholders in ``text``; ``{{``/``}}`` are escapes."""
    return [m.group(1) for m in PLACEHOLDER.finditer(text) if m.group(1)]


def unescape(text: str) -> str:
    return text.replace("{{", "{").replace("}}", "}")


class SkillSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int = 1, source: str | None = None):
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.source = source


class LibraryError(ValueError):
    def __init__(self, issues: list[str]):
        super().__init__(f"{len(issues)} library error(s):\n" + "\n".join(issues))
        self.issues = issues


# --------------------------------------------------------------------------- types


@dataclass(frozen=True)
class FeasibleDomain:
    kind: str  # "finite" | "open"
    values: tuple[str, ...] = ()
    generator: Generator | None = None

    def __str__(self) -> str:
        if self.kind == "finite":
            return "finite{" + ",".join(_fmt_scalar(v) for v in self.values) + "}"
        return f"open {self.generator}"


@dataclass(frozen=True)
class ArgumentSlot:
    name: str
    domain: FeasibleDomain
    description: str = ""


@dataclass(frozen=True)
class Guard:
    op: str
    target: str
    literal: str | None = None
    negated: bool = False

    def __str__(self) -> str:
        if self.op == "equals":
            body = f"equals({self.target}, {quote(self.literal or '')})"
        else:
            body = f"{self.op}({self.target})"
        return f"not {body}" if self.negated else body

    def substitute(self, values: dict[str, str]) -> "Guard":
        return Guard(
            self.op,
            substitute(self.target, values),
            None if self.literal is None else substitute(self.literal, values),
            self.negated,
        )


@functools.lru_cache(maxsize=4096)
def _action_placeholders(params: tuple) -> tuple[str, ...]:
    out: list[str] = []
    for _, v in params:
        for s in (v if isinstance(v, tuple) else (v,)):
            out.extend(placeholders(s))
    return tuple(out)


@dataclass(frozen=True)
class BaseAction:
    kind: str
    params: tuple[tuple[str, str | tuple[str, ...]], ...] = ()

    def get(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def placeholder_names(self) -> list[str]:
        return list(_action_placeholders(self.params))

    def substitute(self, values: dict[str, str]) -> "BaseAction":
        params = []
        for k, v in self.params:
            if isinstance(v, tuple):
                params.append((k, tuple(substitute(s, values) for s in v)))
            else:
                params.append((k, substitute(v, values)))
        return BaseAction(self.kind, tuple(params))

    def __str__(self) -> str:
        parts = []
        for k, v in self.params:
            if isinstance(v, tuple):
                parts.append(f"{k}=[" + ",".join(_fmt_scalar(s) for s in v) + "]")
            else:
                parts.append(f"{k}={_fmt_scalar(v)}")
        return f"{self.kind}(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    action: BaseAction
    guard: Guard | None = None
    weight: float | None = None


@dataclass(frozen=True)
class ExecutionGraph:
    nodes: tuple[str, ...]
    start: str | None
    terminals: tuple[str, ...]
    edges: tuple[GraphEdge, ...]

    def out_edges(self, node: str) -> list[GraphEdge]:
        return [e for e in self.edges if e.src == node]


@dataclass(frozen=True)
class SkillSpec:
    id: str
    application: str
    intent: str
    arguments: tuple[ArgumentSlot, ...]
    graph: ExecutionGraph
    tags: tuple[str, ...] = ()
    effects: tuple[Guard, ...] = ()

    def argument(self, name: str) -> ArgumentSlot | None:
        for a in self.arguments:
            if a.name == name:
                return a
        return None

    @property
    def is_basic(self) -> bool:
        return "basic" in self.tags


@dataclass(frozen=True)
class CompositionEdge:
    src: str
    dst: str
    scope: str  # "single_app" | "cross_app"


@dataclass(frozen=True)
class CompositionGraph:
    nodes: tuple[str, ...] = ()
    edges: tuple[CompositionEdge, ...] = ()
    entries: tuple[str, ...] = ()

    def successors(self, node: str) -> list[str]:
        return [e.dst for e in self.edges if e.src == node]

    def has_edge(self, src: str, dst: str) -> bool:
        return any(e.src == src and e.dst == dst for e in self.edges)


@dataclass
class SkillLibrary:
    """Immutable by convention once returned from :func:`load_library`."""

    skills: dict[str, SkillSpec] = field(default_factory=dict)
    composition: CompositionGraph = field(default_factory=CompositionGraph)
    sources: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, skill_id: str) -> SkillSpec:
        return self.skills[skill_id]

    def __contains__(self, skill_id: str) -> bool:
        return skill_id in self.skills

    def __len__(self) -> int:
        return len(self.skills)

    @property
    def applications(self) -> list[str]:
        return sorted({s.application for s in self.skills.values()})


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


# --------------------------------------------------------------------------- helpers


def substitute(text: str, values: dict[str, str]) -> str:
    """Replace bound placeholders, keeping ``{{``/``}}`` escapes and unbound names.

    Inserted values are escaped so they can never introduce new placeholders.
    """

    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name and name in values:
            return values[name].replace("{", "{{").replace("}", "}}")
        return m.group(0)

    return PLACEHOLDER.sub(sub, text)


def _fmt_scalar(v: str) -> str:
    return v if _BARE.fullmatch(v) else quote(v)


def _read_value(text: str) -> str:
    text = text.strip()
    if text.startswith('"'):
        return unquote(text)
    return text


def _balanced_end(text: str, open_at: int) -> int:
    """Index just past the parenthesis closing the one at ``open_at``."""
    depth, quoted, escape = 0, False, False
    for i in range(open_at, len(text)):
        c = text[i]
        if quoted:
            if escape:
                escape = False
            elif c == "\\":
                escape = True
            elif c == '"':
                quoted = False
            continue
        if c == '"':
            quoted = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
    raise ValueError("unbalanced parentheses")


def valid_state_path(path: str) -> bool:
    segs = path.split(".")
    if not _IDENT.fullmatch(segs[0]):
        return False
    return all(s and s.isprintable() for s in segs)


def valid_element_query(query: str) -> bool:
    segs = query.split(".", 2)
    return (
        len(segs) == 3
        and bool(_IDENT.fullmatch(segs[0]))
        and bool(_IDENT.fullmatch(segs[1]))
        and bool(segs[2])
        and segs[2].isprintable()
    )


def parse_guard(text: str) -> Guard:
    text = text.strip()
    negated = False
    if text.startswith("not "):
        negated = True
        text = text[4:].strip()
    m = re.match(r"([a-z_]+)\(", text)
    if not m or not text.endswith(")"):
        raise ValueError(f"malformed guard: {text!r}")
    op = m.group(1)
    if op not in GUARD_OPS:
        raise ValueError(f"unknown guard predicate: {op!r}")
    body = text[m.end():-1]
    if op == "equals":
        args = split_top_level(body)
        if len(args) != 2:
            raise ValueError(f"equals takes two arguments: {text!r}")
        return Guard(op, args[0], _read_value(args[1]), negated)
    return Guard(op, body.strip(), None, negated)


def parse_action(text: str) -> BaseAction:
    m = re.fullmatch(r"([a-z_]+)\((.*)\)", text.strip(), re.S)
    if not m:
        raise ValueError(f"malformed action: {text!r}")
    kind = m.group(1)
    if kind not in ACTION_KINDS:
        raise ValueError(f"unknown action kind: {kind!r}")
    params: list[tuple[str, str | tuple[str, ...]]] = []
    for item in split_top_level(m.group(2)):
        key, eq, raw = item.partition("=")
        key = key.strip()
        if not eq or not _IDENT.fullmatch(key):
            raise ValueError(f"malformed action parameter: {item!r}")
        raw = raw.strip()
        if raw.startswith("["):
            if not raw.endswith("]"):
                raise ValueError(f"unterminated list: {raw!r}")
            params.append((key, tuple(_read_value(x) for x in split_top_level(raw[1:-1]))))
        else:
            params.append((key, _read_value(raw)))
    return BaseAction(kind, tuple(params))


def _parse_domain(text: str) -> tuple[FeasibleDomain, str]:
    """Parse a domain and return it with the remaining (description) text."""
    text = text.strip()
    if text.startswith("finite{"):
        end = _scan_brace(text, 6)
        if end is None:
            raise ValueError("unterminated finite{...}")
        values = tuple(_read_value(v) for v in split_top_level(text[7:end]) if v)
        return FeasibleDomain("finite", values), text[end + 1:]
    if text.startswith("open "):
        rest = text[5:].strip()
        paren = rest.find("(")
        if paren < 0:
            raise ValueError("open domain needs a generator")
        end = _balanced_end(rest, paren)
        try:
            gen = parse_generator(rest[:end])
        except GeneratorError as e:
            raise ValueError(str(e)) from e
        return FeasibleDomain("open", (), gen), rest[end:]
    raise ValueError(f"unknown domain: {text!r}")


def _scan_brace(text: str, open_at: int) -> int | None:
    quoted = escape = False
    for i in range(open_at + 1, len(text)):
        c = text[i]
        if quoted:
            if escape:
                escape = False
            elif c == "\\":
                escape = True
            elif c == '"':
                quoted = False
        elif c == '"':
            quoted = True
        elif c == "}":
            return i
    return None


# --------------------------------------------------------------------------- parse / serialize


def parse_skill(text: str, source: str | None = None) -> SkillSpec:
    skill_id = app = intent = None
    tags: list[str] = []
    effects: list[Guard] = []
    args: list[ArgumentSlot] = []
    nodes: list[str] = []
    start: str | None = None
    terminals: list[str] = []
    edges: list[GraphEdge] = []

    def err(msg: str, lineno: int, col: int = 1):
        return SkillSyntaxError(msg, lineno, col, source)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        col = raw.index(line[0]) + 1
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if keyword == "skill":
                if skill_id is not None:
                    raise err("second 'skill' line", lineno, col)
                if not _IDENT.fullmatch(rest):
                    raise err(f"bad skill id {rest!r}", lineno, col + 6)
                skill_id = rest
            elif keyword == "app":
                if not _IDENT.fullmatch(rest):
                    raise err(f"bad application tag {rest!r}", lineno, col + 4)
                app = rest
            elif keyword == "intent":
                intent = unquote(rest)
            elif keyword == "tag":
                tags.extend(t for t in rest.split() if t)
            elif keyword == "effect":
                effects.append(parse_guard(rest))
            elif keyword == "arg":
                name, _, spec = rest.partition(" ")
                if not _IDENT.fullmatch(name):
                    raise err(f"bad argument name {name!r}", lineno, col + 4)
                domain, tail = _parse_domain(spec)
                tail = tail.strip()
                args.append(ArgumentSlot(name, domain, unquote(tail) if tail else ""))
            elif keyword == "node":
                parts = rest.split()
                if not parts or not _NODE_ID.fullmatch(parts[0]):
                    raise err(f"bad node id {rest!r}", lineno, col + 5)
                nid = parts[0]
                if nid in nodes:
                    raise err(f"duplicate node id {nid!r}", lineno, col + 5)
                nodes.append(nid)
                for flag in parts[1:]:
                    if flag == "start":
                        if start is not None:
                            raise err("second start node", lineno, col)
                        start = nid
                    elif flag == "terminal":
                        terminals.append(nid)
                    else:
                        raise err(f"unknown node flag {flag!r}", lineno, col)
            elif keyword == "edge":
                edges.append(_parse_edge(rest))
            else:
                raise err(f"unknown keyword {keyword!r}", lineno, col)
        except SkillSyntaxError:
            raise
        except ValueError as e:
            raise err(str(e), lineno, col) from e

    if skill_id is None:
        raise SkillSyntaxError("missing 'skill' line", 1, 1, source)
    if app is None:
        raise SkillSyntaxError("missing 'app' line", 1, 1, source)
    graph = ExecutionGraph(tuple(nodes), start, tuple(terminals), tuple(edges))
    return SkillSpec(skill_id, app, intent or "", tuple(args), graph, tuple(tags), tuple(effects))


def _parse_edge(rest: str) -> GraphEdge:
    m = re.match(r"(\S+)\s*->\s*(\S+)\s+action\s+", rest)
    if not m:
        raise ValueError("expected 'edge <from> -> <to> action <kind>(...)'")
    src, dst = m.group(1), m.group(2)
    tail = rest[m.end():]
    paren = tail.find("(")
    if paren < 0:
        kind = tail.split()[0] if tail.split() else ""
        raise ValueError(f"unknown action kind: {kind!r}" if kind not in ACTION_KINDS else "action needs (...)")
    kind = tail[:paren].strip()
    if kind not in ACTION_KINDS:
        raise ValueError(f"unknown action kind: {kind!r}")
    end = _balanced_end(tail, paren)
    action = parse_action(tail[:end])
    tail = tail[end:].strip()
    guard = weight = None
    if tail.startswith("guard "):
        g = tail[6:].strip()
        gm = re.match(r"(not\s+)?[a-z_]+\(", g)
        if not gm:
            raise ValueError(f"malformed guard: {g!r}")
        gend = _balanced_end(g, gm.end() - 1)
        guard = parse_guard(g[:gend])
        tail = g[gend:].strip()
    if tail.startswith("weight "):
        try:
            weight = float(tail[7:].strip())
        except ValueError as e:
            raise ValueError(f"bad weight: {tail[7:]!r}") from e
        tail = ""
    if tail:
        raise ValueError(f"unexpected trailing text: {tail!r}")
    return GraphEdge(src, dst, action, guard, weight)


def serialize_skill(s: SkillSpec) -> str:
    lines = [f"skill {s.id}", f"app {s.application}", f"intent {quote(s.intent)}"]
    if s.tags:
        lines.append("tag " + " ".join(s.tags))
    lines += [f"effect {e}" for e in s.effects]
    for a in s.arguments:
        line = f"arg {a.name} {a.domain}"
        if a.description:
            line += " " + quote(a.description)
        lines.append(line)
    for n in s.graph.nodes:
        flags = []
        if n == s.graph.start:
            flags.append("start")
        if n in s.graph.terminals:
            flags.append("terminal")
        lines.append(" ".join(["node", n, *flags]))
    for e in s.graph.edges:
        line = f"edge {e.src} -> {e.dst} action {e.action}"
        if e.guard is not None:
            line += f" guard {e.guard}"
        if e.weight is not None:
            line += f" weight {e.weight!r}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- validation


def validate_skill(s: SkillSpec) -> list[Violation]:
    out: list[Violation] = []
    g = s.graph
    names = [a.name for a in s.arguments]
    for n in sorted({n for n in names if names.count(n) > 1}):
        out.append(Violation("duplicate_argument", n))
    for a in s.arguments:
        d = a.domain
        if d.kind == "finite" and (not d.values or d.generator is not None):
            out.append(Violation("empty_domain", a.name))
        elif d.kind == "open":
            if d.generator is None or d.values:
                out.append(Violation("bad_generator", a.name))
            else:
                try:
                    d.generator.check()
                except GeneratorError as e:
                    out.append(Violation("bad_generator", f"{a.name}: {e}"))
        elif d.kind not in ("finite", "open"):
            out.append(Violation("bad_domain_kind", f"{a.name}: {d.kind}"))

    node_set = set(g.nodes)
    if g.start is None:
        out.append(Violation("no_start", s.id))
    if not g.terminals:
        out.append(Violation("no_terminal", s.id))
    for i, e in enumerate(g.edges):
        where = f"edge {i} {e.src}->{e.dst}"
        for end in (e.src, e.dst):
            if end not in node_set:
                out.append(Violation("unknown_node", f"{where}: {end}"))
        if e.src in g.terminals:
            out.append(Violation("edge_from_terminal", where))
        if e.weight is not None and not (math.isfinite(e.weight) and e.weight > 0):
            out.append(Violation("bad_weight", f"{where}: {e.weight}"))
        for p in e.action.placeholder_names():
            if p not in names:
                out.append(Violation("unbound_placeholder", f"{where}: {{{p}}}"))
        for key in REQUIRED_PARAMS.get(e.action.kind, ()):
            if e.action.get(key) is None:
                out.append(Violation("missing_action_param", f"{where}: {e.action.kind}.{key}"))
        mode = e.action.get("input_mode")
        if e.action.kind == "type_text" and mode is not None and mode not in INPUT_MODES:
            out.append(Violation("bad_input_mode", f"{where}: {mode}"))
        if e.guard is not None:
            out.extend(_guard_violations(e.guard, where))
    for i, eff in enumerate(s.effects):
        where = f"effect {i}"
        if eff.op != "equals" or eff.negated:
            out.append(Violation("bad_effect", f"{where}: {eff}"))
        out.extend(_guard_violations(eff, where))

    if g.start is not None and g.start in node_set:
        seen = _reachable(g, g.start)
        for t in g.terminals:
            if t not in seen:
                out.append(Violation("unreachable_terminal", t))
    return out


def _guard_violations(guard: Guard, where: str) -> list[Violation]:
    if guard.op not in GUARD_OPS:
        return [Violation("bad_guard", f"{where}: {guard.op}")]
    if guard.op == "exists" and not valid_element_query(guard.target):
        return [Violation("bad_guard_query", f"{where}: {guard.target}")]
    if guard.op == "equals" and not valid_state_path(guard.target):
        return [Violation("bad_guard_path", f"{where}: {guard.target}")]
    if guard.op == "focused_app" and not _IDENT.fullmatch(guard.target):
        return [Violation("bad_guard_app", f"{where}: {guard.target}")]
    return []


def _reachable(g: ExecutionGraph, start: str) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for e in g.edges:
            if e.src == n and e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return seen


def effect_placeholders(s: SkillSpec) -> list[str]:
    out: list[str] = []
    for eff in s.effects:
        out.extend(placeholders(eff.target))
        if eff.literal is not None:
            out.extend(placeholders(eff.literal))
    return out


# --------------------------------------------------------------------------- library


COMPOSITION_FILE = "composition.txt"


def parse_composition(text: str, source: str | None = None) -> tuple[list[tuple[str, str]], list[str]]:
    pairs: list[tuple[str, str]] = []
    entries: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = re.fullmatch(r"compose\s+(\S+)\s*->\s*(\S+)", line)
        if m:
            pairs.append((m.group(1), m.group(2)))
            continue
        m = re.fullmatch(r"entry\s+(\S+)", line)
        if m:
            entries.append(m.group(1))
            continue
        raise SkillSyntaxError(f"bad composition line {line!r}", lineno, 1, source)
    return pairs, entries


def build_composition(skills: dict[str, SkillSpec], pairs, entries) -> CompositionGraph:
    nodes: list[str] = []
    edges: list[CompositionEdge] = []
    for a, b in pairs:
        for n in (a, b):
            if n not in nodes:
                nodes.append(n)
        same = skills[a].application == skills[b].application
        edges.append(CompositionEdge(a, b, "single_app" if same else "cross_app"))
    for n in entries:
        if n not in nodes:
            nodes.append(n)
    return CompositionGraph(tuple(nodes), tuple(edges), tuple(entries))


def load_library(root: str | Path) -> SkillLibrary:
    """Load every ``*.skill`` file under ``root`` plus ``composition.txt``.

    All problems are collected and raised together as a :class:`LibraryError`.
    """
    root = Path(root)
    if not root.is_dir():
        raise LibraryError([f"{root}: not a directory"])
    issues: list[str] = []
    skills: dict[str, SkillSpec] = {}
    sources: dict[str, str] = {}
    for path in sorted(root.rglob("*.skill")):
        rel = str(path.relative_to(root))
        try:
            spec = parse_skill(path.read_text(encoding="utf-8"), rel)
        except SkillSyntaxError as e:
            issues.append(f"syntax_error: {e}")
            continue
        if spec.id in skills:
            issues.append(f"duplicate_skill_id: {spec.id} in {sources[spec.id]} and {rel}")
            continue
        for v in validate_skill(spec):
            issues.append(f"{v.code}: {spec.id} ({rel}): {v.detail}")
        skills[spec.id] = spec
        sources[spec.id] = rel

    pairs: list[tuple[str, str]] = []
    entries: list[str] = []
    comp_path = root / COMPOSITION_FILE
    if comp_path.exists():
        try:
            pairs, entries = parse_composition(comp_path.read_text(encoding="utf-8"), COMPOSITION_FILE)
        except SkillSyntaxError as e:
            issues.append(f"syntax_error: {e}")
    for a, b in pairs:
        for n in (a, b):
            if n not in skills:
                issues.append(f"missing_skill: composition edge {a} -> {b} references {n}")
    for n in entries:
        if n not in skills:
            issues.append(f"missing_skill: composition entry references {n}")
    if issues:
        raise LibraryError(issues)
    ordered = dict(sorted(skills.items()))
    comp = build_composition(ordered, pairs, entries)
    return SkillLibrary(ordered, comp, dict(sorted(sources.items())))


# --------------------------------------------------------------------------- stats


@dataclass(frozen=True)
class StatsRow:
    application: str
    count: int
    mean: float
    std: float
    lo: int
    hi: int

    def format(self) -> str:
        if self.count == 0:
            return f"{self.application:<16} {0:>5}  {'-':>13}  {'-':>8}"
        return (
            f"{self.application:<16} {self.count:>5}  "
            f"{self.mean:>5.2f} ± {self.std:<5.2f}  [{self.lo}–{self.hi}]"
        )


@dataclass(frozen=True)
class StatsTable:
    rows: tuple[StatsRow, ...]
    total: StatsRow

    def format(self) -> str:
        if not self.rows:
            return ""
        head = f"{'Application':<16} {'Count':>5}  {'Mean ± Std':>13}  Range"
        return "\n".join([head, *(r.format() for r in self.rows), self.total.format()]) + "\n"


def primitive_count(s: SkillSpec) -> int:
    """Length of the longest guard-free start-to-terminal simple path.

    Skills whose every path crosses a guard fall back to the longest simple
    path overall.
    """
    g = s.graph
    best = _longest(g, lambda e: e.guard is None)
    if best < 0:
        best = _longest(g, lambda e: True)
    return max(best, 0)


def _longest(g: ExecutionGraph, keep) -> int:
    terminals = set(g.terminals)
    best = -1

    def dfs(node: str, depth: int, on_path: set[str]) -> None:
        nonlocal best
        if node in terminals:
            best = max(best, depth)
            return
        for e in g.edges:
            if e.src == node and keep(e) and e.dst not in on_path:
                on_path.add(e.dst)
                dfs(e.dst, depth + 1, on_path)
                on_path.discard(e.dst)

    if g.start is not None:
        dfs(g.start, 0, {g.start})
    return best


def _row(app: str, counts: list[int]) -> StatsRow:
    if not counts:
        return StatsRow(app, 0, 0.0, 0.0, 0, 0)
    return StatsRow(app, len(counts), statistics.fmean(counts), statistics.pstdev(counts), min(counts), max(counts))


def library_stats(lib: SkillLibrary) -> StatsTable:
    per_app: dict[str, list[int]] = {}
    for s in lib.skills.values():
        per_app.setdefault(s.application, []).append(primitive_count(s))
    rows = tuple(_row(app, per_app[app]) for app in sorted(per_app))
    total = _row("Total", [c for app in sorted(per_app) for c in per_app[app]])
    return StatsTable(rows, total)
