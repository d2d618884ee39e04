"""Deterministic simulated desktop."""

from .apps import APPS, ActionError
from .env import (
    DesktopSim,
    FaultInjector,
    PrimitiveAction,
    SnapshotToken,
    StaleTokenError,
    apply_action,
    hotkey_matcher,
    initial_state,
    normalize_keys,
)
from .state import (
    MISSING,
    AppState,
    Element,
    GoalCheck,
    GoalResult,
    UiState,
    check_goal,
    evaluate_guard,
    from_canonical,
    query_elements,
    resolve_path,
    to_canonical,
)

__all__ = [
    "APPS", "ActionError", "AppState", "DesktopSim", "Element", "FaultInjector", "GoalCheck",
    "GoalResult", "MISSING", "PrimitiveAction", "SnapshotToken", "StaleTokenError", "UiState",
    "apply_action", "check_goal", "evaluate_guard", "from_canonical", "hotkey_matcher",
    "initial_state", "normalize_keys", "query_elements", "resolve_path", "to_canonical",
]
