"""Agent loop: observe, query, retrieve, rerank with basic fallback,
configure, execute, remember."""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from ._rng import mix_seed
from .arguments import ArgumentBinding, ConfiguredSkill, instantiate, validate_binding
from .executor import ExecutionOutcome, ExecutionTrace, TraversalPolicy, execute_skill
from .model import SkillLibrary, SkillSpec
from .retrieval import SkillIndex, hybrid_retrieve
from .sim.env import DesktopSim, FaultInjector, hotkey_matcher
from .sim.state import GoalCheck, UiState, check_goal

DONE = "done"
FAIL = "fail"
CONFIG_ERROR = "config_error"
WIRE_VERSION = 1


class PlannerContractError(RuntimeError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    query_budget: int = 3  # K
    skill_budget: int = 10  # L, cap on merged retrieval results
    max_steps: int = 30
    per_channel_k: int = 5
    traversal_mode: str = "uniform"
    seed: int = 0
    executor_max_steps: int = 64

    def __post_init__(self):
        for name in ("query_budget", "skill_budget", "max_steps", "per_channel_k", "executor_max_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def candidate_cap(self, n_basic: int) -> int:
        return min(self.skill_budget, 2 * self.per_channel_k * self.query_budget) + n_basic


# --------------------------------------------------------------------------- memory


@dataclass(frozen=True)
class MemoryRecord:
    step: int
    skill_id: str
    binding_digest: str
    status: str
    summary: str
    failed: bool
    args: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "step": self.step, "skill": self.skill_id, "binding": self.binding_digest,
            "status": self.status, "summary": self.summary, "failed": self.failed, "args": dict(self.args),
        }


@dataclass(frozen=True)
class EpisodeMemory:
    """The instruction plus one record per executed (or rejected) skill."""

    instruction: str
    records: tuple[MemoryRecord, ...] = ()

    def __len__(self) -> int:
        return 1 + len(self.records)

    @property
    def last(self) -> MemoryRecord | None:
        return self.records[-1] if self.records else None

    def failures(self) -> tuple[MemoryRecord, ...]:
        return tuple(r for r in self.records if r.failed)

    def tail(self, n: int = 5) -> list[dict]:
        return [r.to_json() for r in self.records[-n:]]


def default_summary(cs: ConfiguredSkill, outcome: ExecutionOutcome) -> str:
    line = f"{cs.spec.id}: {outcome.status}"
    return f"{line} ({outcome.detail})" if outcome.detail else line


def update_memory(
    mem: EpisodeMemory, cs: ConfiguredSkill, outcome: ExecutionOutcome, summary: str | None = None
) -> EpisodeMemory:
    rec = MemoryRecord(
        step=len(mem.records),
        skill_id=cs.spec.id,
        binding_digest=cs.binding.digest(),
        status=outcome.status,
        summary=summary if summary is not None else default_summary(cs, outcome),
        failed=not outcome.ok,
        args=tuple(sorted(cs.binding.values.items())),
    )
    return replace(mem, records=mem.records + (rec,))


# --------------------------------------------------------------------------- planner contract


@dataclass(frozen=True)
class SkillCard:
    id: str
    application: str
    intent: str
    arguments: tuple[tuple[str, str], ...]  # (name, domain description)
    basic: bool

    @classmethod
    def of(cls, spec: SkillSpec) -> "SkillCard":
        args = tuple((a.name, _domain_text(a.domain)) for a in spec.arguments)
        return cls(spec.id, spec.application, spec.intent, args, spec.is_basic)

    def to_json(self) -> dict:
        return {"id": self.id, "app": self.application, "intent": self.intent,
                "args": [list(a) for a in self.arguments], "basic": self.basic}


def _domain_text(d) -> str:
    if d.kind == "finite":
        return "{" + ",".join(d.values) + "}"
    return str(d.generator)


class Planner(Protocol):
    def generate_queries(self, instruction: str, observation: UiState, memory: EpisodeMemory, k: int) -> list[str]: ...

    def rerank(self, candidates: Sequence[SkillCard], observation: UiState, memory: EpisodeMemory) -> str: ...

    def configure(self, skill: SkillSpec, observation: UiState, memory: EpisodeMemory) -> Mapping[str, str]: ...

    def summarize(self, cs: ConfiguredSkill, outcome: ExecutionOutcome) -> str: ...


def basic_skill_set(lib: SkillLibrary) -> list[str]:
    return sorted(sid for sid, s in lib.skills.items() if s.is_basic)


class GoldPlanner:
    """Replays a known skill sequence; gives up after the first failure."""

    def __init__(self, sequence: Sequence[tuple[str, ArgumentBinding]]):
        self.sequence = list(sequence)

    def _next(self, memory: EpisodeMemory) -> str:
        if memory.failures():
            return FAIL
        i = len(memory.records)
        return self.sequence[i][0] if i < len(self.sequence) else DONE

    def generate_queries(self, instruction, observation, memory, k):
        nxt = self._next(memory)
        return [nxt] if nxt not in (DONE, FAIL) else [instruction]

    def rerank(self, candidates, observation, memory):
        nxt = self._next(memory)
        if nxt in (DONE, FAIL) or any(c.id == nxt for c in candidates):
            return nxt
        return FAIL

    def configure(self, skill, observation, memory):
        return dict(self.sequence[len(memory.records)][1].values)

    def summarize(self, cs, outcome):
        return default_summary(cs, outcome)


@dataclass(frozen=True)
class Rule:
    """When the instruction matches ``pattern`` and the newest memory record is
    ``(last_skill, last_status)``, choose ``choose`` with ``args``.

    ``last_skill`` None means no record yet; ``last_status`` is "success",
    "failure", or "*". Argument values may use ``{group}`` references to the
    instruction match.
    """

    pattern: str
    last_skill: str | None
    last_status: str
    choose: str
    args: tuple[tuple[str, str], ...] = ()

    def applies(self, instruction: str, last: MemoryRecord | None) -> re.Match | None:
        m = re.search(self.pattern, instruction)
        if m is None:
            return None
        if last is None:
            return m if self.last_skill is None else None
        if self.last_skill != last.skill_id:
            return None
        if self.last_status == "*" or self.last_status == ("failure" if last.failed else "success"):
            return m
        return None


_FOLDER = r"^Create a new folder named '(?P<name>[^']+)' inside (?P<parent>\S+)$"
_SETTEXT = r"^Replace the text editor's contents with '(?P<text>[^']+)'$"

DEFAULT_RULES: tuple[Rule, ...] = (
    Rule(_FOLDER, None, "*", "FilesLaunch"),
    Rule(_FOLDER, "FilesLaunch", "success", "FilesCreateFolder", (("parent", "{parent}"), ("folder_name", "{name}"))),
    Rule(_FOLDER, "FilesCreateFolder", "failure", "FilesCreateFolderViaRibbon",
         (("parent", "{parent}"), ("folder_name", "{name}"))),
    Rule(_FOLDER, "FilesCreateFolder", "success", DONE),
    Rule(_FOLDER, "FilesCreateFolderViaRibbon", "success", DONE),
    Rule(_SETTEXT, None, "*", "EditorLaunch"),
    Rule(_SETTEXT, "EditorLaunch", "success", "EditorSetText", (("text", "{text}"),)),
    Rule(_SETTEXT, "EditorSetText", "success", DONE),
    Rule(_SETTEXT, "EditorSetText", "failure", "BasicHotkey", (("keys", "ctrl+a"),)),
    Rule(_SETTEXT, "BasicHotkey", "success", "BasicTypeKeyboard", (("text", "{text}"),)),
    Rule(_SETTEXT, "BasicTypeKeyboard", "success", DONE),
)


class ScriptedPlanner:
    """Deterministic rule table over (instruction, newest memory record).

    With no applicable rule the planner answers ``fail``.
    """

    def __init__(self, rules: Sequence[Rule] = DEFAULT_RULES):
        self.rules = list(rules)

    def _decide(self, memory: EpisodeMemory) -> tuple[str, dict[str, str]]:
        for r in self.rules:
            m = r.applies(memory.instruction, memory.last)
            if m is not None:
                groups = {k: v for k, v in m.groupdict().items() if v is not None}
                return r.choose, {k: v.format(**groups) for k, v in r.args}
        return FAIL, {}

    def generate_queries(self, instruction, observation, memory, k):
        choice, _ = self._decide(memory)
        qs = [choice] if choice not in (DONE, FAIL) else []
        return (qs + [instruction])[:k]

    def rerank(self, candidates, observation, memory):
        choice, _ = self._decide(memory)
        if choice in (DONE, FAIL) or any(c.id == choice for c in candidates):
            return choice
        return FAIL

    def configure(self, skill, observation, memory):
        return self._decide(memory)[1]

    def summarize(self, cs, outcome):
        return default_summary(cs, outcome)


class WirePlanner:
    """Planner served over HTTP; each contract call is one JSON POST.

    Request fields: ``version``, ``call`` (generate_queries | rerank |
    configure | summarize), ``instruction``, ``observation_digest``,
    ``memory_tail`` (newest five records), plus ``k`` for queries,
    ``candidates`` (skill cards) for rerank, ``skill`` (card) for configure,
    and ``skill`` + ``status`` + ``detail`` for summarize.
    Response fields: ``version`` and one of ``queries`` (list of strings),
    ``choice`` (skill id, "done" or "fail"), ``args`` (name -> value) or
    ``summary`` (string).
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._memory: EpisodeMemory | None = None

    def _post(self, call: str, memory: EpisodeMemory | None, observation: UiState | None, **extra) -> dict:
        memory = memory or self._memory
        payload = {
            "version": WIRE_VERSION,
            "call": call,
            "instruction": memory.instruction if memory else "",
            "observation_digest": observation.digest() if observation is not None else "",
            "memory_tail": memory.tail() if memory else [],
            **extra,
        }
        req = urllib.request.Request(
            self.endpoint, json.dumps(payload).encode("utf-8"), {"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as e:
            raise PlannerContractError(f"planner endpoint {self.endpoint}: {e}") from e
        if data.get("version") != WIRE_VERSION:
            raise PlannerContractError(f"planner endpoint replied with version {data.get('version')!r}")
        return data

    def generate_queries(self, instruction, observation, memory, k):
        self._memory = memory
        return [str(q) for q in self._post("generate_queries", memory, observation, k=k)["queries"]]

    def rerank(self, candidates, observation, memory):
        self._memory = memory
        return str(self._post("rerank", memory, observation, candidates=[c.to_json() for c in candidates])["choice"])

    def configure(self, skill, observation, memory):
        self._memory = memory
        out = self._post("configure", memory, observation, skill=SkillCard.of(skill).to_json())["args"]
        return {str(k): str(v) for k, v in out.items()}

    def summarize(self, cs, outcome):
        out = self._post("summarize", None, None, skill=cs.spec.id, status=outcome.status, detail=outcome.detail)
        return str(out["summary"])


# --------------------------------------------------------------------------- episodes


@dataclass
class EpisodeResult:
    status: str  # "success" | "fail" | "budget_exhausted"
    steps: int
    memory: EpisodeMemory
    traces: list[ExecutionTrace] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "success"


def run_episode(
    instruction: str,
    lib: SkillLibrary,
    index: SkillIndex,
    env,
    planner: Planner,
    config: AgentConfig = AgentConfig(),
    goal: GoalCheck | None = None,
) -> EpisodeResult:
    if not instruction or not instruction.strip():
        raise ValueError("empty instruction")
    basic = basic_skill_set(lib)
    memory = EpisodeMemory(instruction)
    traces: list[ExecutionTrace] = []
    log: list[dict] = [{"event": "start", "instruction": instruction, "config": _config_json(config)}]

    def finish(status: str, steps: int, detail: str = "") -> EpisodeResult:
        log.append({"event": "end", "status": status, "steps": steps, "detail": detail})
        return EpisodeResult(status, steps, memory, traces, log, detail)

    for t in range(config.max_steps):
        obs = env.observe()
        queries = list(planner.generate_queries(instruction, obs, memory, config.query_budget))
        if len(queries) > config.query_budget or not all(isinstance(q, str) for q in queries):
            raise PlannerContractError(f"step {t}: {len(queries)} queries exceed budget {config.query_budget}")
        queries = [q for q in queries if q.strip()]
        retrieved = hybrid_retrieve(index, queries, config.per_channel_k)[: config.skill_budget] if queries else []
        ids = [r.skill_id for r in retrieved]
        ids += [b for b in basic if b not in ids]
        cards = [SkillCard.of(lib.skills[i]) for i in ids]
        log.append({"event": "queries", "step": t, "queries": queries})
        log.append({"event": "candidates", "step": t, "retrieved": len(retrieved), "ids": ids})

        choice = planner.rerank(cards, obs, memory)
        log.append({"event": "rerank", "step": t, "choice": choice, "memory_tail": memory.tail()})
        if choice == DONE:
            if goal is None:
                return finish("success", t)
            res = check_goal(goal, env.observe())
            log.append({"event": "goal", "step": t, "passed": res.passed, "details": list(res.details)})
            return finish("success" if res.passed else "fail", t, "" if res.passed else "; ".join(res.details))
        if choice == FAIL:
            return finish("fail", t, "planner gave up")
        if choice not in ids:
            raise PlannerContractError(f"step {t}: planner chose {choice!r}, which was not presented")

        spec = lib.skills[choice]
        values = planner.configure(spec, obs, memory)
        binding = values if isinstance(values, ArgumentBinding) else ArgumentBinding(choice, dict(values))
        report = validate_binding(lib, binding) if binding.skill_id == choice else [f"skill_mismatch:{binding.skill_id}"]
        log.append({"event": "configure", "step": t, "skill": choice, "args": dict(sorted(binding.values.items())),
                    "report": report})
        if report:
            outcome = ExecutionOutcome(CONFIG_ERROR, "; ".join(report))
            cs = ConfiguredSkill(spec, ArgumentBinding(choice, dict(binding.values)), spec.graph)
            memory = update_memory(memory, cs, outcome, default_summary(cs, outcome))
            continue

        cs = instantiate(spec, binding)
        policy = TraversalPolicy(config.traversal_mode, mix_seed(config.seed, t), config.executor_max_steps)
        trace = execute_skill(cs, env, policy)
        traces.append(trace)
        log.append({
            "event": "execute", "step": t, "skill": choice, "status": trace.outcome.status,
            "detail": trace.outcome.detail, "actions": [s.primitive.describe() for s in trace.steps],
            "digest": env.observe().digest(),
        })
        memory = update_memory(memory, cs, trace.outcome, planner.summarize(cs, trace.outcome))
    return finish("budget_exhausted", config.max_steps)


def _config_json(c: AgentConfig) -> dict:
    return {"k": c.query_budget, "l": c.skill_budget, "max_steps": c.max_steps, "per_channel_k": c.per_channel_k,
            "mode": c.traversal_mode, "seed": c.seed}


def write_transcript(result: EpisodeResult, path: str | Path, task_id: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in result.transcript:
            fh.write(json.dumps({"task": task_id, **rec}, ensure_ascii=False) + "\n")


def audit_transcript(records: Sequence[dict], n_basic: int) -> list[str]:
    """Budget and visibility checks over one episode's transcript records."""
    issues = []
    cfg = records[0]["config"]
    cap = AgentConfig(cfg["k"], cfg["l"], cfg["max_steps"], cfg["per_channel_k"]).candidate_cap(n_basic)
    prev_failed = None
    for r in records:
        ev = r["event"]
        if ev == "queries" and len(r["queries"]) > cfg["k"]:
            issues.append(f"step {r['step']}: {len(r['queries'])} queries > K={cfg['k']}")
        elif ev == "candidates":
            if r["retrieved"] > cfg["l"]:
                issues.append(f"step {r['step']}: {r['retrieved']} retrieved > L={cfg['l']}")
            if len(r["ids"]) > cap:
                issues.append(f"step {r['step']}: {len(r['ids'])} candidates > {cap}")
        elif ev == "rerank":
            if prev_failed is not None and not any(
                m["step"] == prev_failed and m["failed"] for m in r["memory_tail"]
            ):
                issues.append(f"step {r['step']}: failure at record {prev_failed} not visible")
            prev_failed = None
        elif ev in ("execute", "configure") and (r.get("status", "") not in ("", "success") or r.get("report")):
            prev_failed = _record_index(records, r)
        elif ev == "end" and r["steps"] > cfg["max_steps"]:
            issues.append(f"{r['steps']} steps > max_steps={cfg['max_steps']}")
    return issues


def _record_index(records: Sequence[dict], target: dict) -> int:
    # memory record index = number of configure/execute outcomes before this one
    n = 0
    for r in records:
        if r is target:
            return n
        if r["event"] == "execute" or (r["event"] == "configure" and r["report"]):
            n += 1
    return n


# --------------------------------------------------------------------------- batch runs


def make_planner(kind: str, task=None) -> Planner:
    if kind == "gold":
        if task is None:
            raise ValueError("the gold planner needs a task with a gold sequence")
        return GoldPlanner(task.gold_sequence)
    if kind == "scripted":
        return ScriptedPlanner()
    if kind.startswith("wire:"):
        return WirePlanner(kind[5:])
    raise ValueError(f"unknown planner {kind!r}")


def run_task(lib: SkillLibrary, index: SkillIndex, task, planner_kind: str, config: AgentConfig,
             env=None) -> EpisodeResult:
    env = env if env is not None else DesktopSim()
    cfg = replace(config, seed=task.seed)
    return run_episode(task.instruction, lib, index, env, make_planner(planner_kind, task), cfg, task.goal)


# --------------------------------------------------------------------------- fault injection


@dataclass(frozen=True)
class FaultCase:
    """A task plus the hotkey whose first use the environment rejects."""

    task: object
    fault_keys: tuple[str, ...]

    def env(self) -> FaultInjector:
        return FaultInjector(DesktopSim(), hotkey_matcher(*self.fault_keys), times=1)


def build_fault_suite(lib: SkillLibrary, n: int = 40, seed: int = 42) -> list[FaultCase]:
    """Half folder-creation tasks whose shortcut fails once, half editor
    text-replacement tasks whose select-all fails once."""
    from .synth import synthesize_task

    cases = []
    for i in range(n):
        s = mix_seed(seed, "fault", i)
        if i % 2 == 0:
            task = synthesize_task(lib, ["FilesLaunch", "FilesCreateFolder"], s, task_id=f"fault-{i:03d}")
            cases.append(FaultCase(task, ("ctrl", "shift", "n")))
        else:
            task = synthesize_task(lib, ["EditorLaunch", "EditorSetText"], s, task_id=f"fault-{i:03d}")
            cases.append(FaultCase(task, ("ctrl", "a")))
    return cases
