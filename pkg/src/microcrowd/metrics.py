"""Project metrics derived purely from the event log.

Nothing here reads folded state: every figure is a scan over the project's
events, so an independent scanner over the same log file must reproduce the
report exactly.
"""

from __future__ import annotations

from .events import Event
from .model import MICROTASK_KINDS

__all__ = ["compute_metrics"]


def _median_lower(values: list[int]) -> int | None:
    """Median without interpolation; even-sized lists take the lower middle."""
    if not values:
        return None
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def compute_metrics(events: list[Event], project_id: str) -> dict:
    completed_by_kind = {kind: 0 for kind in MICROTASK_KINDS}
    rejections: dict[str, int] = {}
    durations: list[int] = []
    assigned_at: dict[str, int] = {}
    first_assigned: dict[str, int] = {}
    first_completed: dict[str, int] = {}
    behaviors_identified = 0
    tests_stored = 0
    tested_behaviors: set[str] = set()
    retired_behaviors: set[str] = set()
    last_suite_outcome: dict[str, bool] = {}
    implementations_stored = 0
    implemented_functions: set[str] = set()
    conflicts_opened = 0
    conflicts_resolved = 0
    skips = 0
    timeouts = 0
    suite_runs = 0
    suite_millis = 0
    project_completed = False

    for event in events:
        p = event.payload
        if p.get("projectId") != project_id:
            continue
        kind = event.kind
        if kind == "MicrotaskAssigned":
            assigned_at[p["microtaskId"]] = event.timestamp
            first_assigned.setdefault(p["workerId"], event.timestamp)
        elif kind == "SubmissionApplied":
            if p["disposition"] == "completed":
                completed_by_kind[p["kind"]] += 1
                started = assigned_at.get(p["microtaskId"])
                if started is not None:
                    durations.append((event.timestamp - started) // 1000)
                first_completed.setdefault(p["workerId"], event.timestamp)
            else:
                code = p.get("rejectionCode", "Unknown")
                rejections[code] = rejections.get(code, 0) + 1
        elif kind == "MicrotaskSkipped":
            skips += 1
        elif kind == "MicrotaskTimedOut":
            timeouts += 1
        elif kind == "BehaviorAdded":
            behaviors_identified += 1
        elif kind == "TestStored":
            tests_stored += 1
            tested_behaviors.add(p["behaviorId"])
        elif kind == "BehaviorRetired":
            retired_behaviors.add(p["behaviorId"])
        elif kind == "SuiteRan":
            suite_runs += 1
            suite_millis += p["durationMillis"]
            outcome: dict[str, bool] = {}
            for entry in p["results"]:
                bid = entry["behaviorId"]
                outcome[bid] = outcome.get(bid, True) and entry["status"] == "Pass"
            last_suite_outcome.update(outcome)
        elif kind == "ImplementationStored":
            implementations_stored += 1
            implemented_functions.add(p["functionId"])
        elif kind == "ConflictOpened":
            conflicts_opened += 1
        elif kind == "ConflictResolved":
            conflicts_resolved += 1
        elif kind == "ProjectCompleted":
            project_completed = True

    passing = sum(
        1
        for bid, ok in last_suite_outcome.items()
        if ok and bid not in retired_behaviors
    )
    onboarding = {
        wid: (first_completed[wid] - first_assigned[wid]) // 1000
        for wid in first_completed
        if wid in first_assigned
    }
    return {
        "projectId": project_id,
        "microtasksCompleted": sum(completed_by_kind.values()),
        "completionSecondsMedian": _median_lower(durations),
        "countsByKind": completed_by_kind,
        "behaviors": {
            "identified": behaviors_identified,
            "tested": len(tested_behaviors),
            "passing": passing,
            "retired": len(retired_behaviors),
        },
        "tests": {"stored": tests_stored},
        "implementations": {
            "stored": implementations_stored,
            "functions": len(implemented_functions),
        },
        "conflicts": {"opened": conflicts_opened, "resolved": conflicts_resolved},
        "rejections": rejections,
        "skips": skips,
        "timeouts": timeouts,
        "suiteRuns": suite_runs,
        "suiteMillisTotal": suite_millis,
        "onboardingSeconds": onboarding,
        "projectCompleted": project_completed,
    }
