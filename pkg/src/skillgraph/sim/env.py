"""Primitive actions, the pure transition function, and the simulator env."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Callable

from .apps import APPS, ActionError
from .state import AppState, UiState

KEY_ALIASES = {"esc": "escape", "return": "enter", "del": "delete", "control": "ctrl", "win": "super"}


def normalize_key(key: str) -> str:
    k = key.strip().lower()
    return KEY_ALIASES.get(k, k)


def _split_chord(text: str) -> list[str]:
    if len(text) <= 1:
        return [text]
    parts = text.split("+")
    if text.endswith("+"):  # "ctrl++" means ctrl and the plus key
        parts = [p for p in parts if p] + ["+"]
    return parts


def normalize_keys(keys) -> tuple[str, ...]:
    if isinstance(keys, str):
        keys = (keys,)
    return _normalize_keys(tuple(keys))


@functools.lru_cache(maxsize=1024)
def _normalize_keys(keys: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for item in keys:
        out.extend(normalize_key(k) for k in _split_chord(item) if k.strip())
    return tuple(out)


@dataclass(frozen=True)
class PrimitiveAction:
    kind: str
    target: str | None = None  # element id for single_click
    text: str | None = None
    input_mode: str | None = None
    keys: tuple[str, ...] = ()
    key: str | None = None
    app: str | None = None
    ms: int = 0
    command: str | None = None

    def describe(self) -> str:
        if self.kind == "launch_app":
            return f"launch_app({self.app})"
        if self.kind == "single_click":
            return f"single_click({self.target})"
        if self.kind == "type_text":
            return f"type_text({self.text!r}, {self.input_mode})"
        if self.kind == "hotkey":
            return f"hotkey({'+'.join(self.keys)})"
        if self.kind == "press_key":
            return f"press_key({self.key})"
        if self.kind == "wait":
            return f"wait({self.ms})"
        return f"script({self.command!r})"


def initial_state(apps=None) -> UiState:
    models = APPS if apps is None else {n: APPS[n] for n in apps}
    return UiState(None, {n: AppState(False, m.initial_vars(), {}) for n, m in models.items()}, "")


def apply_action(state: UiState, a: PrimitiveAction) -> UiState:
    """Deterministic successor state; raises :class:`ActionError` on rejection.

    Only the focused application and the global clipboard can change.
    """
    if a.kind == "wait":
        return state
    if a.kind == "launch_app":
        model = APPS.get(a.app or "")
        if model is None or a.app not in state.apps:
            raise ActionError(f"unknown application {a.app!r}")
        new = state.copy()
        app = state.apps[a.app].copy()
        app.launched = True
        app.windows = model.windows(app.vars)
        new.apps[a.app] = app
        new.focused_app = a.app
        return new

    name = state.focused_app
    if name is None:
        raise ActionError("no focused application")
    model = APPS[name]
    new = state.copy()
    app = state.apps[name].copy()
    v = app.vars

    if a.kind == "single_click":
        hit = None
        for wname, window in app.windows.items():
            for el in window:
                if el.id == a.target:
                    hit = (wname, el)
                    break
            if hit:
                break
        if hit is None:
            raise ActionError(f"{name}: unknown element {a.target!r}")
        if not hit[1].enabled:
            raise ActionError(f"{name}: element {a.target!r} is disabled")
        model.click(v, hit[0], hit[1])
    elif a.kind == "type_text":
        mode = a.input_mode or "keyboard"
        if mode not in ("keyboard", "copy_paste"):
            raise ActionError(f"bad input mode {mode!r}")
        text = a.text or ""
        if mode == "keyboard" and not text:
            return state
        if mode == "copy_paste":
            new.clipboard = text
        model.type_text(v, text, mode)
    elif a.kind == "hotkey":
        keys = normalize_keys(a.keys)
        if not keys:
            raise ActionError("empty hotkey")
        model.keys(v, keys)
    elif a.kind == "press_key":
        model.keys(v, normalize_keys((a.key or "",)))
    elif a.kind == "script":
        model.script(v, a.command or "")
    else:
        raise ActionError(f"unknown action kind {a.kind!r}")

    app.windows = model.windows(v)
    new.apps[name] = app
    return new


class StaleTokenError(RuntimeError):
    pass


@dataclass(frozen=True)
class SnapshotToken:
    epoch: int
    index: int


class DesktopSim:
    """One episode's simulated desktop with snapshot/rollback."""

    supports_rollback = True

    def __init__(self, initial: UiState | None = None):
        self._initial = initial if initial is not None else initial_state()
        self._epoch = 0
        self._counter = itertools.count()
        self._snaps: dict[SnapshotToken, UiState] = {}
        self.state = self._initial
        self.actions_applied = 0

    def reset(self) -> UiState:
        self._epoch += 1
        self._snaps.clear()
        self.state = self._initial
        self.actions_applied = 0
        return self.state

    def observe(self) -> UiState:
        return self.state

    def apply(self, action: PrimitiveAction) -> None:
        self.state = apply_action(self.state, action)
        self.actions_applied += 1

    def snapshot(self) -> SnapshotToken:
        token = SnapshotToken(self._epoch, next(self._counter))
        self._snaps[token] = self.state
        return token

    def restore(self, token: SnapshotToken) -> UiState:
        if token.epoch != self._epoch or token not in self._snaps:
            raise StaleTokenError(f"snapshot {token} is not valid in this episode")
        self.state = self._snaps[token]
        return self.state


class FaultInjector:
    """Wraps an env and rejects the first ``times`` actions matching ``match``.

    The fault counter is not rolled back by ``restore``.
    """

    def __init__(self, env, match: Callable[[PrimitiveAction], bool], times: int = 1):
        self.env = env
        self.match = match
        self.remaining = times
        self.injected = 0

    @property
    def supports_rollback(self) -> bool:
        return getattr(self.env, "supports_rollback", False)

    def reset(self):
        return self.env.reset()

    def observe(self):
        return self.env.observe()

    def apply(self, action: PrimitiveAction) -> None:
        if self.remaining > 0 and self.match(action):
            self.remaining -= 1
            self.injected += 1
            raise ActionError(f"injected fault on {action.describe()}")
        self.env.apply(action)

    def snapshot(self):
        return self.env.snapshot()

    def restore(self, token):
        return self.env.restore(token)


def hotkey_matcher(*keys: str) -> Callable[[PrimitiveAction], bool]:
    want = normalize_keys(keys)
    return lambda a: a.kind == "hotkey" and normalize_keys(a.keys) == want
