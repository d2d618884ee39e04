"""Parameterized skill graphs for desktop agents: skill files, argument
binding, guarded graph execution, a deterministic desktop simulator, task
synthesis, hybrid retrieval, and a planner-driven agent loop."""

from .agent import AgentConfig, EpisodeMemory, EpisodeResult, GoldPlanner, ScriptedPlanner, run_episode
from .arguments import ArgumentBinding, instantiate, sample_value, validate_binding
from .executor import TraversalPolicy, enumerate_paths, execute_skill
from .model import SkillLibrary, SkillSpec, library_stats, load_library, parse_skill
from .retrieval import HashingEmbedder, build_index, hybrid_retrieve, lexical_search, semantic_search
from .synth import SynthTask, export_dataset, load_dataset, sample_path, synthesize_task

__version__ = "0.1.0"

__all__ = [
    "AgentConfig", "ArgumentBinding", "EpisodeMemory", "EpisodeResult", "GoldPlanner", "HashingEmbedder",
    "ScriptedPlanner", "SkillLibrary", "SkillSpec", "SynthTask", "TraversalPolicy", "build_index",
    "enumerate_paths", "execute_skill", "export_dataset", "hybrid_retrieve", "instantiate", "lexical_search",
    "library_stats", "load_dataset", "load_library", "parse_skill", "run_episode", "sample_path",
    "sample_value", "semantic_search", "synthesize_task", "validate_binding",
]
