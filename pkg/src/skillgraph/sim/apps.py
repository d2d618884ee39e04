"""Toy application models: SimCalculator, SimFiles, SimEditor, SimEdge.

Each model is stateless; all state lives in the ``vars`` dict of its
:class:`AppState`. Handlers mutate a private copy handed to them by
``apply_action`` and raise :class:`ActionError` to reject an action.
"""

from __future__ import annotations

import functools
import math

from .state import Element


class ActionError(Exception):
    pass


@functools.lru_cache(maxsize=8192)
def _el(window: str, name: str, kind: str, enabled: bool = True, value: str = "") -> Element:
    return Element(f"{window}/{name}", name, kind, enabled, value)


def _fmt(x: float) -> str:
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


class AppModel:
    name = ""

    def initial_vars(self) -> dict:
        return {}

    def windows(self, v: dict) -> dict[str, tuple[Element, ...]]:
        return {}

    def click(self, v: dict, window: str, el: Element) -> None:
        raise ActionError(f"{self.name}: {el.name!r} does nothing")

    def type_char(self, v: dict, ch: str) -> None:
        raise ActionError(f"{self.name}: no text input focused")

    def paste(self, v: dict, text: str) -> None:
        for ch in text:
            self.type_char(v, ch)

    def type_text(self, v: dict, text: str, mode: str) -> None:
        if mode == "copy_paste":
            self.paste(v, text)
        else:
            for ch in text:
                self.type_char(v, ch)

    def keys(self, v: dict, keys: tuple[str, ...]) -> None:
        raise ActionError(f"{self.name}: no binding for {'+'.join(keys)}")

    def script(self, v: dict, command: str) -> None:
        raise ActionError(f"{self.name}: script rejected: {command!r}")


# --------------------------------------------------------------------------- calculator


def _tokens(v: dict) -> list[str]:
    return v["tokens"].split() if v["tokens"] else []


def calc_evaluate(tokens: list[str], precedence: bool) -> float:
    """Evaluate alternating number/operator tokens.

    ``precedence`` applies * and / before + and -; otherwise strictly left to right.
    """
    if not tokens:
        return 0.0
    nums = [_num(tokens[0])]
    ops: list[str] = []
    for i in range(1, len(tokens), 2):
        op, x = tokens[i], _num(tokens[i + 1])
        if precedence and op in "*/":
            nums[-1] = _apply(nums[-1], op, x)
        elif precedence:
            ops.append(op)
            nums.append(x)
        else:
            nums[0] = _apply(nums[0], op, x)
    acc = nums[0]
    for op, x in zip(ops, nums[1:]):
        acc = _apply(acc, op, x)
    return acc


def _num(text: str) -> float:
    # a lone decimal point reads as zero, as on the desktop calculator
    return 0.0 if text in ("", ".") else float(text)


def _apply(a: float, op: str, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ActionError("SimCalculator: cannot divide by zero")
        return a / b
    raise ActionError(f"SimCalculator: unknown operator {op!r}")


class SimCalculator(AppModel):
    """Scientific mode honours operator precedence; standard and programmer
    modes execute immediately, left to right, like the desktop calculator."""

    name = "SimCalculator"
    MODES = ("standard", "scientific", "programmer")
    BUTTONS = {"Add": "+", "Subtract": "-", "Multiply": "*", "Divide": "/"}

    def initial_vars(self) -> dict:
        return {"mode": "standard", "display": 0, "entry": "", "tokens": "", "last_op": "", "nav_open": 0}

    def windows(self, v: dict) -> dict:
        main = [_el("main", "Display", "display", value=_fmt(v["display"]))]
        main += [_el("main", d, "button") for d in "0123456789."]
        main += [_el("main", n, "button") for n in (*self.BUTTONS, "Equals", "Square root", "Clear", "Open Navigation")]
        out = {"main": tuple(main)}
        if v["nav_open"]:
            out["nav"] = tuple(_el("nav", m.capitalize(), "menu_item") for m in self.MODES)
        return out

    def _precedence(self, v: dict) -> bool:
        return v["mode"] == "scientific"

    def _clear(self, v: dict) -> None:
        v.update(display=0, entry="", tokens="", last_op="")

    def _set_mode(self, v: dict, mode: str) -> None:
        v["mode"] = mode
        v["nav_open"] = 0
        self._clear(v)

    def type_char(self, v: dict, ch: str) -> None:
        if ch.isdigit() or ch == ".":
            if ch == "." and "." in v["entry"]:
                return
            if v["last_op"] in ("sqrt", "="):
                v["entry"] = ""
                if v["last_op"] == "=":
                    v["last_op"] = ""
            v["entry"] += ch
            v["display"] = float(v["entry"]) if v["entry"] != "." else 0.0
        elif ch in "+-*/":
            self._operator(v, ch)
        elif ch in "=\n":
            self._equals(v)
        elif ch == "@":
            self._sqrt(v)
        elif ch == " ":
            return
        else:
            raise ActionError(f"SimCalculator: rejects character {ch!r}")

    def paste(self, v: dict, text: str) -> None:
        try:
            x = float(text)
        except ValueError as e:
            raise ActionError(f"SimCalculator: cannot paste {text!r}") from e
        v["entry"] = text.strip()
        v["display"] = x
        if v["last_op"] == "=":
            v["last_op"] = ""

    def _operator(self, v: dict, op: str) -> None:
        toks = _tokens(v)
        if v["entry"]:
            toks.append(v["entry"])
        elif toks and toks[-1] in "+-*/":
            toks.pop()
        elif not toks:
            toks.append(_fmt(float(v["display"])))
        if not self._precedence(v):
            value = calc_evaluate(toks, False)
            v["display"] = value
            toks = [repr(value)]
        toks.append(op)
        v.update(tokens=" ".join(toks), entry="", last_op=op)

    def _equals(self, v: dict) -> None:
        toks = _tokens(v)
        if v["entry"]:
            toks.append(v["entry"])
        elif toks and toks[-1] in "+-*/":
            toks.append(_fmt(float(v["display"])))
        if not toks:
            return
        v.update(display=calc_evaluate(toks, self._precedence(v)), tokens="", entry="", last_op="=")

    def _sqrt(self, v: dict) -> None:
        x = _num(v["entry"]) if v["entry"] else float(v["display"])
        if x < 0:
            raise ActionError("SimCalculator: invalid input for square root")
        r = math.sqrt(x)
        v.update(entry=repr(r), display=r, last_op="sqrt")

    def click(self, v: dict, window: str, el: Element) -> None:
        if window == "nav":
            self._set_mode(v, el.name.lower())
            return
        n = el.name
        if n in "0123456789." and len(n) == 1:
            self.type_char(v, n)
        elif n in self.BUTTONS:
            self._operator(v, self.BUTTONS[n])
        elif n == "Equals":
            self._equals(v)
        elif n == "Square root":
            self._sqrt(v)
        elif n == "Clear":
            self._clear(v)
        elif n == "Open Navigation":
            v["nav_open"] = 1 - v["nav_open"]
        else:
            super().click(v, window, el)

    def keys(self, v: dict, keys: tuple[str, ...]) -> None:
        bindings = {
            ("alt", "1"): lambda: self._set_mode(v, "standard"),
            ("alt", "2"): lambda: self._set_mode(v, "scientific"),
            ("alt", "3"): lambda: self._set_mode(v, "programmer"),
            ("escape",): lambda: self._clear(v),
            ("enter",): lambda: self._equals(v),
            ("@",): lambda: self._sqrt(v),
        }
        if keys in bindings:
            bindings[keys]()
        elif len(keys) == 1 and len(keys[0]) == 1:
            self.type_char(v, keys[0])
        else:
            super().keys(v, keys)


# --------------------------------------------------------------------------- file explorer

INITIAL_TREE = {
    "Home": "folder",
    "Home/Documents": "folder",
    "Home/Downloads": "folder",
    "Home/Pictures": "folder",
    "Home/Documents/notes.txt": "file",
    "Home/Downloads/betawacc.xlsx": "file",
    "Home/Downloads/budget.xlsx": "file",
}
SORT_COLUMNS = ("Name", "Date", "Size")
VIEWS = ("Details", "List", "Large icons")


class SimFiles(AppModel):
    """File browser with an inline workbook preview pane (sheet tabs)."""

    name = "SimFiles"

    def initial_vars(self) -> dict:
        v = {
            "cwd": "Home",
            "address": "",
            "focus": "",  # "" | "address" | "edit"
            "editing": "",  # path being renamed, or "sheet:<name>"
            "edit_text": "",
            "edit_fresh": 0,
            "selected": "",
            "selected_tab": "",
            "menu": "",
            "workbook": "",
            "sheet_name": "",
            "sort": "Name",
            "view": "Details",
        }
        for path, kind in INITIAL_TREE.items():
            v["fs." + path] = kind
        return v

    # helpers
    @staticmethod
    def children(v: dict, folder: str) -> list[str]:
        prefix = "fs." + folder + "/"
        return sorted(k[len(prefix):] for k in v if k.startswith(prefix) and "/" not in k[len(prefix):])

    @staticmethod
    def _unique(v: dict, folder: str, name: str) -> str:
        if "fs." + folder + "/" + name not in v:
            return name
        stem, dot, ext = name.rpartition(".") if "." in name else (name, "", "")
        i = 2
        while True:
            cand = f"{stem} ({i}){dot}{ext}"
            if "fs." + folder + "/" + cand not in v:
                return cand
            i += 1

    def windows(self, v: dict) -> dict:
        main = [
            _el("main", "Address bar", "input", value=v["address"] if v["focus"] == "address" else v["cwd"]),
            _el("main", "New", "button"),
            _el("main", "Sort by", "button"),
            _el("main", "View", "button"),
        ]
        for child in self.children(v, v["cwd"]):
            path = v["cwd"] + "/" + child
            value = v["edit_text"] if v["editing"] == path else ""
            main.append(_el("main", child, "list_item", value=value))
        out = {"main": tuple(main)}
        menus = {"new": ("Folder", "Text Document"), "sort": SORT_COLUMNS, "view": VIEWS}
        if v["menu"]:
            out[v["menu"] + "_menu"] = tuple(_el(v["menu"] + "_menu", n, "menu_item") for n in menus[v["menu"]])
        if v["workbook"]:
            value = v["edit_text"] if v["editing"].startswith("sheet:") else ""
            out["workbook"] = (_el("workbook", v["sheet_name"], "tab", value=value),)
        return out

    def _create(self, v: dict, base: str, kind: str) -> None:
        name = self._unique(v, v["cwd"], base)
        path = v["cwd"] + "/" + name
        v["fs." + path] = kind
        v.update(editing=path, edit_text=name, edit_fresh=1, focus="edit", selected=name, menu="")

    def _navigate(self, v: dict, folder: str) -> None:
        folder = folder.strip().strip("/")
        if v.get("fs." + folder) != "folder":
            raise ActionError(f"SimFiles: folder not found: {folder!r}")
        v.update(cwd=folder, selected="", focus="", address="", menu="")

    def _commit(self, v: dict) -> None:
        text = v["edit_text"].strip()
        target = v["editing"]
        v.update(editing="", edit_text="", edit_fresh=0, focus="")
        if not text:
            return
        if target.startswith("sheet:"):
            v["sheet_name"] = text
            v["selected_tab"] = text
            return
        folder, _, old = target.rpartition("/")
        if text == old:
            return
        new = self._unique(v, folder, text)
        moves = [k for k in v if k == "fs." + target or k.startswith("fs." + target + "/")]
        for k in moves:
            v["fs." + folder + "/" + new + k[len("fs." + target):]] = v.pop(k)
        v["selected"] = new

    def type_char(self, v: dict, ch: str) -> None:
        if v["focus"] == "edit":
            if v["edit_fresh"]:
                v["edit_text"], v["edit_fresh"] = "", 0
            v["edit_text"] += ch
        elif v["focus"] == "address":
            v["address"] += ch
        # otherwise type-ahead over the listing: no state change

    def paste(self, v: dict, text: str) -> None:
        if v["focus"] == "edit":
            v["edit_text"], v["edit_fresh"] = text, 0
        elif v["focus"] == "address":
            v["address"] += text

    def click(self, v: dict, window: str, el: Element) -> None:
        if window.endswith("_menu"):
            menu = v["menu"]
            v["menu"] = ""
            if menu == "new":
                self._create(v, "New folder" if el.name == "Folder" else "New Text Document.txt",
                             "folder" if el.name == "Folder" else "file")
            elif menu == "sort":
                v["sort"] = el.name
            elif menu == "view":
                v["view"] = el.name
            return
        if window == "workbook":
            v["selected_tab"] = el.name
            v["selected"] = ""
            return
        if el.name == "Address bar":
            v.update(focus="address", address="")
        elif el.name in ("New", "Sort by", "View") and el.kind == "button":
            key = {"New": "new", "Sort by": "sort", "View": "view"}[el.name]
            v["menu"] = "" if v["menu"] == key else key
        elif el.kind == "list_item":
            if v["focus"] == "edit":
                self._commit(v)
            v.update(selected=el.name, selected_tab="")
        else:
            super().click(v, window, el)

    def keys(self, v: dict, keys: tuple[str, ...]) -> None:
        if keys in (("ctrl", "l"), ("alt", "d"), ("f4",)):
            v.update(focus="address", address="", menu="")
        elif keys == ("ctrl", "shift", "n"):
            self._create(v, "New folder", "folder")
        elif keys == ("enter",):
            self._enter(v)
        elif keys == ("f2",):
            if v["selected_tab"]:
                v.update(editing="sheet:" + v["selected_tab"], edit_text=v["selected_tab"], edit_fresh=1, focus="edit")
            elif v["selected"]:
                path = v["cwd"] + "/" + v["selected"]
                v.update(editing=path, edit_text=v["selected"], edit_fresh=1, focus="edit")
            else:
                raise ActionError("SimFiles: nothing selected to rename")
        elif keys == ("escape",):
            v.update(focus="", editing="", edit_text="", edit_fresh=0, menu="", address="")
        elif keys == ("f5",):
            return
        else:
            super().keys(v, keys)

    def _enter(self, v: dict) -> None:
        if v["focus"] == "edit":
            self._commit(v)
        elif v["focus"] == "address":
            self._navigate(v, v["address"])
        elif v["selected"]:
            path = v["cwd"] + "/" + v["selected"]
            kind = v.get("fs." + path)
            if kind == "folder":
                self._navigate(v, path)
            elif kind == "file" and path.endswith(".xlsx"):
                # the preview pane reloads from disk: sheet names reset
                v.update(workbook=v["selected"], sheet_name="sheet1", selected_tab="")
            elif kind is None:
                raise ActionError(f"SimFiles: {path!r} no longer exists")

    def script(self, v: dict, command: str) -> None:
        verb, _, arg = command.strip().partition(" ")
        path = arg.strip().strip("/")
        parent, _, leaf = path.rpartition("/")
        if verb not in ("mkdir", "new-item") or not leaf:
            super().script(v, command)
        if v.get("fs." + parent) != "folder":
            raise ActionError(f"SimFiles: parent folder not found: {parent!r}")
        if "fs." + path in v:
            raise ActionError(f"SimFiles: already exists: {path!r}")
        v["fs." + path] = "folder" if verb == "mkdir" else "file"


# --------------------------------------------------------------------------- editor

FONT_SIZES = ("10", "12", "14", "16", "20")
ZOOM_LEVELS = ("50", "100", "150", "200")
THEMES = ("Light", "Dark")


class SimEditor(AppModel):
    name = "SimEditor"

    def initial_vars(self) -> dict:
        return {
            "buffer": "",
            "dirty": 0,
            "select_all": 0,
            "last_input": "",
            "file_name": "Untitled",
            "modal": "",
            "dialog_text": "",
            "dialog_fresh": 0,
            "menu": "",
            "font_size": 12,
            "zoom": 100,
            "theme": "Light",
        }

    def windows(self, v: dict) -> dict:
        out = {
            "main": (
                _el("main", "Document", "input", value=v["buffer"]),
                _el("main", "Format", "button"),
                _el("main", "View", "button"),
            )
        }
        menus = {
            "format": ("Font size",),
            "font_size": FONT_SIZES,
            "view": ("Zoom", "Theme"),
            "zoom": tuple(z + "%" for z in ZOOM_LEVELS),
            "theme": THEMES,
        }
        if v["menu"]:
            out[v["menu"] + "_menu"] = tuple(_el(v["menu"] + "_menu", n, "menu_item") for n in menus[v["menu"]])
        modal = v["modal"]
        if modal == "save_prompt":
            out["save_prompt"] = tuple(_el("save_prompt", n, "button") for n in ("Save", "Don't save", "Cancel"))
        elif modal == "save_as":
            out["save_as"] = (
                _el("save_as", "File name", "input", value=v["dialog_text"]),
                _el("save_as", "Save", "button"),
                _el("save_as", "Cancel", "button"),
            )
        elif modal == "confirm_replace":
            out["confirm_replace"] = tuple(_el("confirm_replace", n, "button") for n in ("Yes", "No"))
        return out

    def _new_document(self, v: dict) -> None:
        v.update(buffer="", dirty=0, select_all=0, file_name="Untitled", modal="")

    def _open_save_as(self, v: dict) -> None:
        v.update(modal="save_as", dialog_text=v["file_name"], dialog_fresh=1, menu="")

    def _save_as_commit(self, v: dict, confirmed: bool = False) -> None:
        name = v["dialog_text"].strip()
        if not name:
            raise ActionError("SimEditor: empty file name")
        if "saved." + name in v and not confirmed:
            v["modal"] = "confirm_replace"
            return
        v["saved." + name] = v["buffer"]
        v.update(file_name=name, dirty=0, modal="", dialog_text="", dialog_fresh=0)

    def type_text(self, v: dict, text: str, mode: str) -> None:
        if v["modal"] == "save_as":
            if v["dialog_fresh"] or mode == "copy_paste":
                v["dialog_text"], v["dialog_fresh"] = "", 0
            v["dialog_text"] += text
            return
        if v["modal"]:
            raise ActionError(f"SimEditor: dialog {v['modal']!r} is open")
        v["menu"] = ""
        if v["select_all"]:
            v["buffer"], v["select_all"] = "", 0
        v["buffer"] += text
        v.update(dirty=1, last_input=text)

    def click(self, v: dict, window: str, el: Element) -> None:
        modal = v["modal"]
        if modal and window != modal:
            raise ActionError(f"SimEditor: dialog {modal!r} is open")
        if window == "save_prompt":
            if el.name == "Don't save":
                self._new_document(v)
            elif el.name == "Save":
                if v["file_name"] == "Untitled":
                    self._open_save_as(v)
                else:
                    v["saved." + v["file_name"]] = v["buffer"]
                    self._new_document(v)
            else:
                v["modal"] = ""
        elif window == "save_as":
            if el.name == "Save":
                self._save_as_commit(v)
            elif el.name == "Cancel":
                v.update(modal="", dialog_text="", dialog_fresh=0)
            else:
                v["dialog_fresh"] = 0
        elif window == "confirm_replace":
            if el.name == "Yes":
                self._save_as_commit(v, confirmed=True)
            else:
                v["modal"] = "save_as"
        elif window.endswith("_menu"):
            menu = v["menu"]
            v["menu"] = ""
            if menu == "format":
                v["menu"] = "font_size"
            elif menu == "view":
                v["menu"] = el.name.lower()
            elif menu == "font_size":
                v["font_size"] = int(el.name)
            elif menu == "zoom":
                v["zoom"] = int(el.name.rstrip("%"))
            elif menu == "theme":
                v["theme"] = el.name
        elif el.name == "Format":
            v["menu"] = "" if v["menu"] == "format" else "format"
        elif el.name == "View":
            v["menu"] = "" if v["menu"] == "view" else "view"
        elif el.name == "Document":
            v.update(menu="", select_all=0)
        else:
            super().click(v, window, el)

    def keys(self, v: dict, keys: tuple[str, ...]) -> None:
        modal = v["modal"]
        if modal:
            if keys == ("escape",):
                v.update(modal="", dialog_text="", dialog_fresh=0)
            elif keys == ("enter",) and modal == "save_as":
                self._save_as_commit(v)
            else:
                raise ActionError(f"SimEditor: dialog {modal!r} is open")
            return
        if keys == ("ctrl", "n"):
            if v["dirty"]:
                v["modal"] = "save_prompt"
            else:
                self._new_document(v)
        elif keys == ("ctrl", "a"):
            v["select_all"] = 1
        elif keys == ("ctrl", "end"):
            v["select_all"] = 0
        elif keys == ("ctrl", "shift", "s"):
            self._open_save_as(v)
        elif keys == ("ctrl", "s"):
            if v["file_name"] == "Untitled":
                self._open_save_as(v)
            else:
                v["saved." + v["file_name"]] = v["buffer"]
                v["dirty"] = 0
        elif keys == ("escape",):
            v["menu"] = ""
        elif keys == ("enter",):
            self.type_text(v, "\n", "keyboard")
        else:
            super().keys(v, keys)


# --------------------------------------------------------------------------- browser

SITES = ("news", "mail", "maps")


class SimEdge(AppModel):
    name = "SimEdge"

    def initial_vars(self) -> dict:
        return {"page": "newtab", "focus": "", "address": "", "show_home": 0, "menu": 0, "tabs": 1}

    def windows(self, v: dict) -> dict:
        main = [
            _el("main", "Address bar", "input", value=v["address"] if v["focus"] == "address" else v["page"]),
            _el("main", "Back", "button"),
            _el("main", "Settings and more", "button"),
        ]
        if v["show_home"]:
            main.append(_el("main", "Home", "button"))
        out = {"main": tuple(main)}
        if v["menu"]:
            out["more_menu"] = (_el("more_menu", "Settings", "menu_item"), _el("more_menu", "History", "menu_item"))
        return out

    def _go(self, v: dict, page: str) -> None:
        v.update(page=page, focus="", address="", menu=0)

    def type_char(self, v: dict, ch: str) -> None:
        if v["focus"] != "address":
            raise ActionError("SimEdge: no text input focused")
        v["address"] += ch

    def click(self, v: dict, window: str, el: Element) -> None:
        if window == "more_menu":
            self._go(v, el.name.lower())
        elif el.name == "Address bar":
            v.update(focus="address", address="", menu=0)
        elif el.name == "Home":
            self._go(v, "home")
        elif el.name == "Settings and more":
            v["menu"] = 1 - v["menu"]
        elif el.name == "Back":
            self._go(v, "newtab")
        else:
            super().click(v, window, el)

    def keys(self, v: dict, keys: tuple[str, ...]) -> None:
        if keys in (("ctrl", "l"), ("alt", "d"), ("f6",)):
            v.update(focus="address", address="", menu=0)
        elif keys == ("alt", "home"):
            self._go(v, "home")
        elif keys == ("ctrl", "h"):
            self._go(v, "history")
        elif keys == ("ctrl", "t"):
            v["tabs"] += 1
            self._go(v, "newtab")
        elif keys == ("enter",) and v["focus"] == "address":
            text = v["address"].strip()
            if not text:
                raise ActionError("SimEdge: empty address")
            self._go(v, text if text in SITES or text == "home" else "search:" + text)
        elif keys == ("escape",):
            v.update(focus="", address="", menu=0)
        else:
            super().keys(v, keys)


APPS: dict[str, AppModel] = {m.name: m for m in (SimCalculator(), SimFiles(), SimEditor(), SimEdge())}
