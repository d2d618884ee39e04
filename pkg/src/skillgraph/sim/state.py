"""Observable desktop state, its canonical text form, guards and goal checks."""

from __future__ import annotations

import functools
import hashlib
import json
import math
from json.encoder import encode_basestring
from dataclasses import dataclass, field

from ..model import Guard

ELEMENT_KINDS = ("button", "tab", "input", "menu_item", "list_item", "display")

Value = str | int | float


@dataclass(frozen=True)
class Element:
    id: str
    name: str
    kind: str
    enabled: bool = True
    value: str = ""


@dataclass
class AppState:
    launched: bool = False
    vars: dict[str, Value] = field(default_factory=dict)
    windows: dict[str, tuple[Element, ...]] = field(default_factory=dict)
    # canonical text cache; app states are never mutated once part of an observed UiState
    _canon: tuple[str, str] | None = field(default=None, compare=False, repr=False)

    def copy(self) -> "AppState":
        return AppState(self.launched, dict(self.vars), dict(self.windows))

    def elements(self):
        for window in self.windows.values():
            yield from window


@dataclass
class UiState:
    focused_app: str | None = None
    apps: dict[str, AppState] = field(default_factory=dict)
    clipboard: str = ""

    def copy(self) -> "UiState":
        # AppState copies are taken lazily by apply_action; a shallow map copy suffices here
        return UiState(self.focused_app, dict(self.apps), self.clipboard)

    def canonical(self) -> str:
        return to_canonical(self)

    def digest(self) -> str:
        return hashlib.sha256(to_canonical(self).encode("utf-8")).hexdigest()[:16]


class _Missing:
    def __repr__(self) -> str:
        return "MISSING"


MISSING = _Missing()


# --------------------------------------------------------------------------- canonical text


def _j(v) -> str:
    # fast paths produce exactly what json.dumps(ensure_ascii=False) would
    if isinstance(v, str):
        return encode_basestring(v)
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v is None:
        return "null"
    if type(v) is int:
        return int.__repr__(v)
    if type(v) is float and math.isfinite(v):
        return float.__repr__(v)
    if type(v) is list:
        return "[" + ", ".join(_j(x) for x in v) + "]"
    return json.dumps(v, ensure_ascii=False, sort_keys=True)


def to_canonical(state: UiState) -> str:
    lines = [f"clipboard\t{_j(state.clipboard)}", f"focused_app\t{_j(state.focused_app)}"]
    for name in sorted(state.apps):
        lines.append(_app_canonical(name, state.apps[name]))
    return "\n".join(lines) + "\n"


@functools.lru_cache(maxsize=4096)
def _element_json(el: Element) -> str:
    return _j([el.id, el.name, el.kind, el.enabled, el.value])


def _app_canonical(name: str, app: AppState) -> str:
    if app._canon is not None and app._canon[0] == name:
        return app._canon[1]
    lines = [f"app\t{name}\t{_j(app.launched)}"]
    for key in sorted(app.vars):
        lines.append(f"var\t{name}\t{key}\t{_j(app.vars[key])}")
    for wname in sorted(app.windows):
        lines.append(f"window\t{name}\t{wname}")
        for el in app.windows[wname]:
            lines.append(f"element\t{name}\t{wname}\t{_element_json(el)}")
    text = "\n".join(lines)
    app._canon = (name, text)
    return text


def from_canonical(text: str) -> UiState:
    state = UiState()
    for line in text.splitlines():
        if not line:
            continue
        tag, _, rest = line.partition("\t")
        if tag == "clipboard":
            state.clipboard = json.loads(rest)
        elif tag == "focused_app":
            state.focused_app = json.loads(rest)
        elif tag == "app":
            name, launched = rest.split("\t")
            state.apps[name] = AppState(json.loads(launched))
        elif tag == "var":
            name, key, value = rest.split("\t", 2)
            state.apps[name].vars[key] = json.loads(value)
        elif tag == "window":
            name, wname = rest.split("\t")
            state.apps[name].windows[wname] = ()
        elif tag == "element":
            name, wname, payload = rest.split("\t", 2)
            eid, ename, kind, enabled, value = json.loads(payload)
            app = state.apps[name]
            app.windows[wname] = app.windows[wname] + (Element(eid, ename, kind, enabled, value),)
        else:
            raise ValueError(f"unknown canonical record {tag!r}")
    return state


# --------------------------------------------------------------------------- paths, queries, guards


def resolve_path(state: UiState, path: str):
    """Value at a dotted state path, or ``MISSING``.

    Paths: ``focused_app``, ``clipboard``, ``<App>.launched``,
    ``<App>.vars.<key>`` (the key may itself contain dots).
    """
    if path == "focused_app":
        return MISSING if state.focused_app is None else state.focused_app
    if path == "clipboard":
        return state.clipboard
    app_name, _, rest = path.partition(".")
    app = state.apps.get(app_name)
    if app is None:
        return MISSING
    if rest == "launched":
        return "true" if app.launched else "false"
    section, _, key = rest.partition(".")
    if section == "vars" and key in app.vars:
        return app.vars[key]
    return MISSING


def query_elements(state: UiState, query: str) -> list[Element]:
    """Elements matching ``<App>.<window>.<element-name>`` (``*`` = any)."""
    parts = query.split(".", 2)
    if len(parts) != 3:
        return []
    app_name, wname, ename = parts
    app = state.apps.get(app_name)
    if app is None or not app.launched or wname not in app.windows:
        return []
    window = app.windows[wname]
    if ename == "*":
        return list(window)
    return [el for el in window if el.name == ename]


def _as_float(v) -> float | None:
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        return float(v)
    try:
        f = float(v)
    except (TypeError, ValueError):
        return None
    return f if math.isfinite(f) else None


def values_equal(actual, expected: str) -> bool:
    """String equality, or numeric equality (1e-9 relative) when both sides parse as numbers."""
    a, b = _as_float(actual), _as_float(expected)
    if a is not None and b is not None:
        return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)
    return str(actual) == expected


def evaluate_guard(g: Guard, state: UiState) -> bool:
    """Total and side-effect free: anything unresolvable evaluates false."""
    try:
        if g.op == "exists":
            result = bool(query_elements(state, g.target))
        elif g.op == "focused_app":
            result = state.focused_app == g.target
        elif g.op == "equals":
            actual = resolve_path(state, g.target)
            result = actual is not MISSING and values_equal(actual, g.literal or "")
        else:
            result = False
    except Exception:  # noqa: BLE001 - guards never fault
        result = False
    return (not result) if g.negated else result


# --------------------------------------------------------------------------- goal checks


@dataclass(frozen=True)
class GoalCheck:
    assertions: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> list[dict]:
        return [{"path": p, "expected": e} for p, e in self.assertions]

    @classmethod
    def from_json(cls, items: list[dict]) -> "GoalCheck":
        return cls(tuple((d["path"], d["expected"]) for d in items))


@dataclass(frozen=True)
class GoalResult:
    passed: bool
    details: tuple[str, ...]


def check_goal(gc: GoalCheck, state: UiState) -> GoalResult:
    details = []
    ok = True
    for path, expected in gc.assertions:
        actual = resolve_path(state, path)
        if actual is MISSING:
            ok = False
            details.append(f"path_unresolved: {path}")
        elif values_equal(actual, expected):
            details.append(f"ok: {path} == {expected!r}")
        else:
            ok = False
            details.append(f"mismatch: {path} == {actual!r}, expected {expected!r}")
    return GoalResult(ok, tuple(details))
