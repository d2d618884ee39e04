"""Open-domain argument generators.

Each generator can draw a value from a seeded stream and can decide whether
an arbitrary string belongs to its value grammar. Acceptance is wider than
sampling: ``text(1,64)`` samples short word strings but accepts any printable
string of that length.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ._rng import SplitMix64

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PLACEHOLDER = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")
_FORBIDDEN_TEXT = set("/\\{}")

WORDS = (
    "alpha", "budget", "notes", "report", "summary", "draft", "final", "logs",
    "photos", "archive", "project", "meeting", "plan", "review", "weekly",
    "quarterly", "invoice", "backup", "ideas", "tasks", "travel", "music",
    "data", "results", "team", "client", "design", "sales", "agenda", "memo",
)
_STEM_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789"


class GeneratorError(ValueError):
    """Malformed generator spec."""


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def check(self) -> None:
        if self.lo > self.hi:
            raise GeneratorError(f"int_range lo > hi: {self.lo} > {self.hi}")

    def sample(self, rng: SplitMix64) -> str:
        self.check()
        return str(rng.integer(self.lo, self.hi))

    def accepts(self, value: str) -> bool:
        if not re.fullmatch(r"-?(0|[1-9][0-9]*)", value):
            return False
        return self.lo <= int(value) <= self.hi

    def __str__(self) -> str:
        return f"int_range({self.lo},{self.hi})"


@dataclass(frozen=True)
class ChoiceOf:
    options: tuple[str, ...]

    def check(self) -> None:
        if not self.options:
            raise GeneratorError("choice list is empty")

    def sample(self, rng: SplitMix64) -> str:
        self.check()
        return rng.choice(self.options)

    def accepts(self, value: str) -> bool:
        return value in self.options

    def __str__(self) -> str:
        return "choice(" + "|".join(self.options) + ")"


@dataclass(frozen=True)
class Filename:
    extensions: tuple[str, ...]

    def check(self) -> None:
        if not self.extensions:
            raise GeneratorError("filename needs at least one extension")

    def sample(self, rng: SplitMix64) -> str:
        self.check()
        stem = "".join(rng.choice(_STEM_CHARS) for _ in range(rng.integer(3, 8)))
        return f"{stem}.{rng.choice(self.extensions)}"

    def accepts(self, value: str) -> bool:
        stem, dot, ext = value.rpartition(".")
        if not dot or not stem or ext not in self.extensions:
            return False
        return all(c.isprintable() and c not in '\\/:*?"<>|{}' for c in stem)

    def __str__(self) -> str:
        return "filename(" + ",".join(self.extensions) + ")"


@dataclass(frozen=True)
class Text:
    min_len: int
    max_len: int

    def check(self) -> None:
        if self.min_len < 0 or self.min_len > self.max_len:
            raise GeneratorError(f"text length range invalid: {self.min_len}..{self.max_len}")

    def sample(self, rng: SplitMix64) -> str:
        self.check()
        # readable output: cap the target near the low end of long ranges
        target = rng.integer(self.min_len, min(self.max_len, max(self.min_len, 24)))
        words: list[str] = []
        while len(" ".join(words)) < target:
            words.append(rng.choice(WORDS))
        out = " ".join(words)[:target].rstrip()
        while len(out) < self.min_len:
            out += rng.choice("abcdefghijklmnopqrstuvwxyz")
        return out

    def accepts(self, value: str) -> bool:
        if not self.min_len <= len(value) <= self.max_len:
            return False
        return all(c.isprintable() and c not in _FORBIDDEN_TEXT for c in value)

    def __str__(self) -> str:
        return f"text({self.min_len},{self.max_len})"


@dataclass(frozen=True)
class Composite:
    template: str
    parts: tuple[tuple[str, "Generator"], ...]

    def check(self) -> None:
        names = [n for n, _ in self.parts]
        if len(set(names)) != len(names):
            raise GeneratorError("composite has duplicate sub-generator names")
        used = _template_names(self.template)
        missing = [n for n in used if n not in names]
        if missing:
            raise GeneratorError(f"composite template references undeclared {missing}")
        for _, g in self.parts:
            g.check()

    def sample(self, rng: SplitMix64) -> str:
        self.check()
        drawn = {name: g.sample(rng) for name, g in self.parts}
        return _render(self.template, drawn)

    def accepts(self, value: str) -> bool:
        pieces = _split_template(self.template)
        subs = dict(self.parts)
        return _match_pieces(pieces, 0, value, 0, subs)

    def __str__(self) -> str:
        inner = ", ".join(f"{n}={g}" for n, g in self.parts)
        return f'composite("{self.template}", {inner})'


Generator = IntRange | ChoiceOf | Filename | Text | Composite


def _template_names(template: str) -> list[str]:
    return [m.group(1) for m in _PLACEHOLDER.finditer(template) if m.group(1)]


def _render(template: str, values: dict[str, str]) -> str:
    def sub(m: re.Match) -> str:
        if m.group(0) == "{{":
            return "{"
        if m.group(0) == "}}":
            return "}"
        return values[m.group(1)]

    return _PLACEHOLDER.sub(sub, template)


def _split_template(template: str) -> list[tuple[str, str]]:
    """Split into ('lit', text) and ('var', name) pieces."""
    pieces: list[tuple[str, str]] = []
    pos = 0
    lit = ""
    for m in _PLACEHOLDER.finditer(template):
        lit += template[pos:m.start()]
        if m.group(1):
            if lit:
                pieces.append(("lit", lit))
                lit = ""
            pieces.append(("var", m.group(1)))
        else:
            lit += m.group(0)[0]
        pos = m.end()
    lit += template[pos:]
    if lit:
        pieces.append(("lit", lit))
    return pieces


def _match_pieces(pieces, i, value, pos, subs) -> bool:
    if i == len(pieces):
        return pos == len(value)
    kind, text = pieces[i]
    if kind == "lit":
        return value.startswith(text, pos) and _match_pieces(pieces, i + 1, value, pos + len(text), subs)
    for end in range(len(value), pos - 1, -1):
        if subs[text].accepts(value[pos:end]) and _match_pieces(pieces, i + 1, value, end, subs):
            return True
    return False


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses, brackets and double quotes."""
    out, depth, buf, quoted, escape = [], 0, [], False, False
    for c in text:
        if quoted:
            buf.append(c)
            if escape:
                escape = False
            elif c == "\\":
                escape = True
            elif c == '"':
                quoted = False
            continue
        if c == '"':
            quoted = True
        elif c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        elif c == sep and depth == 0:
            out.append("".join(buf).strip())
            buf = []
            continue
        buf.append(c)
    if quoted or depth != 0:
        raise GeneratorError(f"unbalanced generator text: {text!r}")
    tail = "".join(buf).strip()
    if tail or out:
        out.append(tail)
    return out


def unquote(text: str) -> str:
    if len(text) < 2 or text[0] != '"' or text[-1] != '"':
        raise GeneratorError(f"expected quoted string: {text!r}")
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse_generator(text: str) -> Generator:
    text = text.strip()
    m = re.fullmatch(r"([a-z_]+)\((.*)\)", text, re.S)
    if not m:
        raise GeneratorError(f"malformed generator: {text!r}")
    kind, body = m.group(1), m.group(2)
    if kind == "int_range":
        args = split_top_level(body)
        try:
            lo, hi = (int(a) for a in args)
        except ValueError as e:
            raise GeneratorError(f"int_range needs two integers: {text!r}") from e
        g: Generator = IntRange(lo, hi)
    elif kind == "choice":
        g = ChoiceOf(tuple(o.strip() for o in body.split("|") if o.strip()))
    elif kind == "filename":
        g = Filename(tuple(e.strip().lstrip(".") for e in body.split(",") if e.strip()))
    elif kind == "text":
        args = split_top_level(body)
        try:
            lo, hi = (int(a) for a in args)
        except ValueError as e:
            raise GeneratorError(f"text needs two integers: {text!r}") from e
        g = Text(lo, hi)
    elif kind == "composite":
        args = split_top_level(body)
        if not args:
            raise GeneratorError("composite needs a template")
        template = unquote(args[0])
        parts = []
        for a in args[1:]:
            name, eq, sub = a.partition("=")
            if not eq or not _IDENT.fullmatch(name.strip()):
                raise GeneratorError(f"bad composite part: {a!r}")
            parts.append((name.strip(), parse_generator(sub)))
        g = Composite(template, tuple(parts))
    else:
        raise GeneratorError(f"unknown generator kind: {kind!r}")
    g.check()
    return g
