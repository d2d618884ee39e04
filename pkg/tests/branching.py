"""Branch-frequency measurement over fixture skills on the real simulator."""

from collections import Counter
from dataclasses import dataclass

from skillgraph.arguments import ArgumentBinding, instantiate
from skillgraph.executor import TraversalPolicy, execute_skill
from skillgraph.sim import DesktopSim, PrimitiveAction


@dataclass(frozen=True)
class BranchCase:
    skill: str
    node: str
    args: tuple = ()
    setup: tuple = ()  # primitive actions that prepare the desktop

    def binding(self):
        return ArgumentBinding(self.skill, dict(self.args))


def _launch(app, *more):
    return (PrimitiveAction("launch_app", app=app), *more)


_NUMBER = PrimitiveAction("type_text", text="5", input_mode="keyboard")

# every fixture node with more than one unguarded out-edge
FIXTURE_BRANCHES = (
    BranchCase("CalculatorEnterNumber", "s0", (("number", "42"),), _launch("SimCalculator")),
    BranchCase("CalculatorAdd", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("CalculatorSubtract", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("CalculatorMultiply", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("CalculatorDivide", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("CalculatorSquareRoot", "s1", (("number", "9"),), _launch("SimCalculator")),
    BranchCase("CalculatorEquals", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("CalculatorClear", "s0", (), _launch("SimCalculator", _NUMBER)),
    BranchCase("FilesNavigate", "s0", (("folder", "Home/Pictures"),), _launch("SimFiles")),
    BranchCase("FilesCreateTextFile", "s3", (("parent", "Home"), ("file_name", "a.txt")), _launch("SimFiles")),
    BranchCase("EditorSetText", "s1", (("text", "hello"),), _launch("SimEditor")),
    BranchCase("EditorSaveAs", "s2", (("file_name", "a.txt"),), _launch("SimEditor")),
    BranchCase("EdgeNavigate", "s0", (("site", "news"),), _launch("SimEdge")),
    BranchCase("EdgeSearch", "s1", (("query", "weather"),), _launch("SimEdge")),
    BranchCase("EdgeOpenHistory", "s0", (), _launch("SimEdge")),
)


def branch_frequencies(lib, case: BranchCase, runs: int, mode: str = "uniform", seed0: int = 0,
                       keep_traces: bool = False):
    """Fraction of successful runs leaving ``case.node`` by each out-edge index.

    Returns ``(freqs, configured skill, action-sequence counts, traces)``; traces
    are only retained when ``keep_traces`` is set.
    """
    spec = lib.skills[case.skill]
    cs = instantiate(spec, case.binding())
    out = [i for i, e in enumerate(cs.resolved_graph.edges) if e.src == case.node]
    env = DesktopSim()
    for a in case.setup:
        env.apply(a)
    start = env.snapshot()
    counts = Counter()
    sequences = Counter()
    traces = []
    for r in range(runs):
        env.restore(start)
        trace = execute_skill(cs, env, TraversalPolicy(mode, seed0 + r))
        assert trace.outcome.ok, (case.skill, trace.outcome)
        step = next(s for s in trace.steps if s.node_from == case.node)
        idx = next(i for i in out if cs.resolved_graph.edges[i].action == step.action
                   and cs.resolved_graph.edges[i].dst == step.node_to)
        counts[idx] += 1
        sequences[trace.action_sequence()] += 1
        if keep_traces:
            traces.append(trace)
    return {i: counts[i] / runs for i in out}, cs, sequences, traces


def expected_shares(cs, node: str, mode: str):
    edges = [(i, e) for i, e in enumerate(cs.resolved_graph.edges) if e.src == node]
    if mode == "uniform":
        return {i: 1 / len(edges) for i, _ in edges}
    total = sum(e.weight if e.weight is not None else 1.0 for _, e in edges)
    return {i: (e.weight if e.weight is not None else 1.0) / total for i, e in edges}
