"""Fixed state machines for behaviors, microtasks and function specs.

`check_transition` is the single arbiter used by the event fold: every state
mutation anywhere in the system goes through it, and a disallowed edge raises
at the fold (which tests treat as a hard failure).
"""

from __future__ import annotations

from enum import Enum

__all__ = [
    "BehaviorState",
    "MicrotaskState",
    "FunctionState",
    "BEHAVIOR_STATES",
    "MICROTASK_STATES",
    "FUNCTION_STATES",
    "UnknownState",
    "TransitionViolation",
    "check_transition",
]


class BehaviorState(str, Enum):
    IDENTIFIED = "Identified"
    TESTED = "Tested"
    PASSING = "Passing"
    CONFLICTED = "Conflicted"
    RETIRED = "Retired"


class MicrotaskState(str, Enum):
    QUEUED = "Queued"
    ASSIGNED = "Assigned"
    SUBMITTED = "Submitted"
    COMPLETED = "Completed"
    SKIPPED = "Skipped"
    TIMED_OUT = "TimedOut"


class FunctionState(str, Enum):
    SPECIFIED = "Specified"
    IN_PROGRESS = "InProgress"
    COMPLETE = "Complete"


BEHAVIOR_STATES = tuple(s.value for s in BehaviorState)
MICROTASK_STATES = tuple(s.value for s in MicrotaskState)
FUNCTION_STATES = tuple(s.value for s in FunctionState)


class UnknownState(ValueError):
    """Unknown entity kind or state name passed to check_transition."""


class TransitionViolation(RuntimeError):
    """An engine commit attempted an edge outside the fixed relation."""


def _behavior_edges() -> frozenset[tuple[str, str]]:
    edges = {
        (BehaviorState.IDENTIFIED, BehaviorState.TESTED),
        (BehaviorState.TESTED, BehaviorState.PASSING),
        (BehaviorState.TESTED, BehaviorState.CONFLICTED),
        (BehaviorState.CONFLICTED, BehaviorState.TESTED),
    }
    # any state may retire
    edges.update((frm, BehaviorState.RETIRED) for frm in BehaviorState)
    return frozenset((a.value, b.value) for a, b in edges)


_RELATION: dict[str, tuple[tuple[str, ...], frozenset[tuple[str, str]]]] = {
    "Behavior": (BEHAVIOR_STATES, _behavior_edges()),
    "Microtask": (
        MICROTASK_STATES,
        frozenset(
            {
                ("Queued", "Assigned"),
                ("Assigned", "Submitted"),
                ("Assigned", "TimedOut"),
                ("TimedOut", "Queued"),
                ("Assigned", "Skipped"),
                ("Skipped", "Queued"),
                ("Submitted", "Completed"),
                ("Submitted", "Queued"),
            }
        ),
    ),
    "FunctionSpec": (
        FUNCTION_STATES,
        frozenset({("Specified", "InProgress"), ("InProgress", "Complete")}),
    ),
}


def check_transition(entity_kind: str, from_state: str, to_state: str) -> bool:
    """True iff the edge is in the fixed relation for the entity kind."""
    try:
        states, edges = _RELATION[entity_kind]
    except KeyError:
        raise UnknownState(f"unknown entity kind {entity_kind!r}") from None
    if from_state not in states:
        raise UnknownState(f"unknown {entity_kind} state {from_state!r}")
    if to_state not in states:
        raise UnknownState(f"unknown {entity_kind} state {to_state!r}")
    return (from_state, to_state) in edges


def require_transition(entity_kind: str, from_state: str, to_state: str) -> None:
    """Raise TransitionViolation unless the edge is allowed."""
    if not check_transition(entity_kind, from_state, to_state):
        raise TransitionViolation(f"{entity_kind}: {from_state} -> {to_state}")
