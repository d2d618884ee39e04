"""Depth-first execution of configured skills against an environment."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

from ._rng import SplitMix64
from .arguments import ConfiguredSkill, residual_placeholders
from .model import BaseAction, ExecutionGraph, GraphEdge, unescape
from .sim.apps import ActionError
from .sim.env import PrimitiveAction, normalize_keys
from .sim.state import UiState, evaluate_guard

SUCCESS = "success"
DEAD_END = "dead_end"
ACTION_ERROR = "action_error"
BUDGET = "step_budget_exceeded"


class TargetResolutionError(ActionError):
    def __init__(self, code: str, descriptor: str, candidates: tuple[str, ...] = ()):
        msg = f"{code}: {descriptor!r}"
        if candidates:
            msg += " candidates=" + ", ".join(candidates)
        super().__init__(msg)
        self.code = code
        self.candidates = candidates


class MalformedGraphError(ValueError):
    pass


class EnvironmentUnreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class TraversalPolicy:
    mode: str = "uniform"  # "uniform" | "weighted"
    seed: int = 0
    max_steps: int = 64

    def __post_init__(self):
        if self.mode not in ("uniform", "weighted"):
            raise ValueError(f"unknown traversal mode {self.mode!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class TraceStep:
    node_from: str
    node_to: str
    action: BaseAction
    primitive: PrimitiveAction
    guard_value: bool
    state: UiState = field(repr=False)

    @functools.cached_property
    def digest(self) -> str:
        """Digest of the observation after this step (computed on first access)."""
        return self.state.digest()


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


@dataclass
class ExecutionTrace:
    steps: list[TraceStep] = field(default_factory=list)
    outcome: ExecutionOutcome = ExecutionOutcome(DEAD_END)
    actions_applied: int = 0
    backtracks: int = 0

    def action_sequence(self) -> tuple[BaseAction, ...]:
        return tuple(s.action for s in self.steps)


def resolve_target(descriptor: str, obs: UiState) -> str:
    """Symbolic grounding: element id of the focused app's element named ``descriptor``.

    Exact name first, then case-insensitive, then unique substring.
    """
    if not descriptor:
        raise ValueError("empty target descriptor")
    app = obs.apps.get(obs.focused_app or "")
    elements = list(app.elements()) if app is not None else []
    low = descriptor.lower()
    for test in (
        lambda el: el.name == descriptor,
        lambda el: el.name.lower() == low,
        lambda el: low in el.name.lower(),
    ):
        hits = [el for el in elements if test(el)]
        if len(hits) == 1:
            return hits[0].id
        if len(hits) > 1:
            raise TargetResolutionError("ambiguous_match", descriptor, tuple(el.name for el in hits))
    raise TargetResolutionError("no_match", descriptor)


@functools.lru_cache(maxsize=4096)
def _decoded(params: tuple) -> dict:
    return {k: (tuple(unescape(x) for x in v) if isinstance(v, tuple) else unescape(v)) for k, v in params}


def realize(action: BaseAction, obs: UiState) -> PrimitiveAction:
    """Turn a resolved base action into a primitive, grounding click targets."""
    p = _decoded(action.params)
    kind = action.kind
    if kind == "single_click":
        return PrimitiveAction(kind, target=resolve_target(p["target"], obs))
    if kind == "type_text":
        return PrimitiveAction(kind, text=p["text"], input_mode=p.get("input_mode", "keyboard"))
    if kind == "hotkey":
        return PrimitiveAction(kind, keys=normalize_keys(p["keys"]))
    if kind == "press_key":
        return PrimitiveAction(kind, key=p["key"])
    if kind == "launch_app":
        return PrimitiveAction(kind, app=p["app"])
    if kind == "wait":
        return PrimitiveAction(kind, ms=int(p.get("ms", "0") or 0))
    if kind == "script":
        return PrimitiveAction(kind, command=p["command"])
    raise MalformedGraphError(f"unknown action kind {kind!r}")


def order_edges(eligible: list[GraphEdge], policy: TraversalPolicy, rng: SplitMix64) -> list[GraphEdge]:
    """Random try-order: uniform shuffle, or successive weight-proportional draws."""
    pool = list(eligible)
    out = []
    while pool:
        if len(pool) == 1:
            out.append(pool.pop())
            break
        if policy.mode == "weighted":
            weights = [e.weight if e.weight is not None else 1.0 for e in pool]
            r = rng.random() * sum(weights)
            idx = len(pool) - 1
            acc = 0.0
            for i, w in enumerate(weights):
                acc += w
                if r < acc:
                    idx = i
                    break
        else:
            idx = rng.below(len(pool))
        out.append(pool.pop(idx))
    return out


class _Budget(Exception):
    pass


def execute_skill(cs: ConfiguredSkill, env, policy: TraversalPolicy) -> ExecutionTrace:
    g = cs.resolved_graph
    residual = residual_placeholders(g)
    if residual:
        raise MalformedGraphError(f"{cs.spec.id}: unresolved placeholders {sorted(set(residual))}")
    if g.start is None:
        raise MalformedGraphError(f"{cs.spec.id}: no start node")
    try:
        env.observe()
    except Exception as e:  # noqa: BLE001
        raise EnvironmentUnreachable(str(e)) from e
    return _Walker(g, env, policy).run()


class _Walker:
    def __init__(self, g: ExecutionGraph, env, policy: TraversalPolicy):
        self.g = g
        self.env = env
        self.policy = policy
        self.rng = SplitMix64(policy.seed)
        self.rollback = bool(getattr(env, "supports_rollback", False))
        self.terminals = set(g.terminals)
        self.out: dict[str, list[GraphEdge]] = {}
        for e in g.edges:
            self.out.setdefault(e.src, []).append(e)
        self.trace = ExecutionTrace()

    def run(self) -> ExecutionTrace:
        try:
            outcome = self.visit(self.g.start, {self.g.start})
        except _Budget:
            outcome = ExecutionOutcome(BUDGET, f"exceeded {self.policy.max_steps} actions")
        self.trace.outcome = outcome
        return self.trace

    def visit(self, node: str, on_path: set[str]) -> ExecutionOutcome:
        if node in self.terminals:
            return ExecutionOutcome(SUCCESS, f"reached {node}")
        obs = self.env.observe()
        eligible = [
            e for e in self.out.get(node, ())
            if e.dst not in on_path and (e.guard is None or evaluate_guard(e.guard, obs))
        ]
        if not eligible:
            return ExecutionOutcome(DEAD_END, f"no eligible edge at {node}")
        failure = None
        for e in order_edges(eligible, self.policy, self.rng):
            if self.trace.actions_applied >= self.policy.max_steps:
                raise _Budget()
            token = self.env.snapshot() if self.rollback else None
            try:
                prim = realize(e.action, self.env.observe())
                self.env.apply(prim)
            except ActionError as err:
                failure = ExecutionOutcome(ACTION_ERROR, f"{e.src}->{e.dst} {e.action.kind}: {err}")
                if self.rollback:
                    self.env.restore(token)
                    self.trace.backtracks += 1
                    continue
                return failure
            self.trace.actions_applied += 1
            self.trace.steps.append(
                TraceStep(node, e.dst, e.action, prim, True, self.env.observe())
            )
            res = self.visit(e.dst, on_path | {e.dst})
            if res.ok or not self.rollback:
                return res
            failure = res
            self.trace.steps.pop()
            self.env.restore(token)
            self.trace.backtracks += 1
        return failure or ExecutionOutcome(DEAD_END, f"alternatives exhausted at {node}")


def enumerate_paths(g: ExecutionGraph, bound: int) -> list[tuple[BaseAction, ...]]:
    """Every distinct simple-path action sequence from start to a terminal, length <= bound."""
    out: list[tuple[BaseAction, ...]] = []
    seen = set()
    terminals = set(g.terminals)
    if g.start is None:
        return out

    def dfs(node: str, on_path: set[str], acts: list[BaseAction]) -> None:
        if node in terminals:
            t = tuple(acts)
            if t not in seen:
                seen.add(t)
                out.append(t)
            return
        if len(acts) >= bound:
            return
        for e in g.edges:
            if e.src == node and e.dst not in on_path:
                acts.append(e.action)
                on_path.add(e.dst)
                dfs(e.dst, on_path, acts)
                on_path.discard(e.dst)
                acts.pop()

    dfs(g.start, {g.start}, [])
    return out
