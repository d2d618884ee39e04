"""Feasible domains, argument sampling, binding validation, instantiation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ._rng import SplitMix64, mix_seed
from .generators import GeneratorError
from .model import (
    PLACEHOLDER,
    ArgumentSlot,
    ExecutionGraph,
    GraphEdge,
    SkillLibrary,
    SkillSpec,
)


class _NotEnumerable:
    def __repr__(self) -> str:
        return "NOT_ENUMERABLE"


NOT_ENUMERABLE = _NotEnumerable()


class UnknownSkillError(KeyError):
    pass


class BindingError(ValueError):
    def __init__(self, skill_id: str, report: list[str]):
        super().__init__(f"invalid binding for {skill_id}: {', '.join(report)}")
        self.skill_id = skill_id
        self.report = report


@dataclass(frozen=True)
class ArgumentBinding:
    skill_id: str
    values: dict[str, str] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.skill_id, tuple(sorted(self.values.items()))))

    def digest(self) -> str:
        text = self.skill_id + "\0" + "\0".join(f"{k}={v}" for k, v in sorted(self.values.items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ConfiguredSkill:
    spec: SkillSpec
    binding: ArgumentBinding
    resolved_graph: ExecutionGraph


def enumerate_domain(slot: ArgumentSlot):
    """Full value list for finite domains, ``NOT_ENUMERABLE`` for open ones."""
    if slot.domain.kind == "finite":
        return list(slot.domain.values)
    return NOT_ENUMERABLE


def sample_value(slot: ArgumentSlot, seed: int) -> str:
    rng = SplitMix64(mix_seed(seed, slot.name))
    d = slot.domain
    if d.kind == "finite":
        if not d.values:
            raise GeneratorError(f"finite domain of {slot.name!r} is empty")
        return rng.choice(d.values)
    if d.generator is None:
        raise GeneratorError(f"open domain of {slot.name!r} has no generator")
    return d.generator.sample(rng)


def in_domain(slot: ArgumentSlot, value: str) -> bool:
    d = slot.domain
    if d.kind == "finite":
        return value in d.values
    return d.generator is not None and d.generator.accepts(value)


def binding_report(spec: SkillSpec, b: ArgumentBinding) -> list[str]:
    report = []
    for slot in spec.arguments:
        if slot.name not in b.values:
            report.append(f"missing_argument:{slot.name}")
        elif not isinstance(b.values[slot.name], str) or not in_domain(slot, b.values[slot.name]):
            report.append(f"domain_violation:{slot.name}")
    declared = {a.name for a in spec.arguments}
    for name in sorted(b.values):
        if name not in declared:
            report.append(f"unknown_argument:{name}")
    return report


def validate_binding(lib: SkillLibrary, b: ArgumentBinding) -> list[str]:
    if b.skill_id not in lib.skills:
        raise UnknownSkillError(b.skill_id)
    return binding_report(lib.skills[b.skill_id], b)


def instantiate(spec: SkillSpec, b: ArgumentBinding) -> ConfiguredSkill:
    report = binding_report(spec, b)
    if b.skill_id != spec.id:
        report.insert(0, f"skill_mismatch:{b.skill_id}")
    if report:
        raise BindingError(spec.id, report)
    g = spec.graph
    edges = tuple(
        GraphEdge(e.src, e.dst, e.action.substitute(b.values), e.guard, e.weight) for e in g.edges
    )
    return ConfiguredSkill(spec, b, ExecutionGraph(g.nodes, g.start, g.terminals, edges))


def residual_placeholders(g: ExecutionGraph) -> list[str]:
    out = []
    for e in g.edges:
        out.extend(e.action.placeholder_names())
    return out


def sample_binding(spec: SkillSpec, seed: int) -> ArgumentBinding:
    return ArgumentBinding(spec.id, {a.name: sample_value(a, mix_seed(seed, spec.id)) for a in spec.arguments})


__all__ = [
    "NOT_ENUMERABLE",
    "PLACEHOLDER",
    "ArgumentBinding",
    "BindingError",
    "ConfiguredSkill",
    "UnknownSkillError",
    "binding_report",
    "enumerate_domain",
    "in_domain",
    "instantiate",
    "residual_placeholders",
    "sample_binding",
    "sample_value",
    "validate_binding",
]
