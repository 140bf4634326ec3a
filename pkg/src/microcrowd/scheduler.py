"""Queue discipline: priority classes, FIFO within class, eligibility guards.

Selection never mutates anything. The service stages the assignment event
after a candidate is chosen, so every decision here must be a pure function
of folded state plus configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import PRIORITY_BY_KIND, WRITER_KINDS, ordinal_of
from .state import MicrotaskRecord, ProjectRecord, ServiceState


@dataclass
class SchedulerConfig:
    lease_seconds: int = 600
    max_attempts: int = 10
    max_skips_before_flag: int = 3
    identify_quorum: int = 1
    self_exclusion: bool = False

    def to_value(self) -> dict:
        return {
            "leaseSeconds": self.lease_seconds,
            "maxAttempts": self.max_attempts,
            "maxSkipsBeforeFlag": self.max_skips_before_flag,
            "identifyQuorum": self.identify_quorum,
            "selfExclusionEnabled": self.self_exclusion,
        }

    @staticmethod
    def from_value(value: dict) -> "SchedulerConfig":
        cfg = SchedulerConfig()
        mapping = {
            "leaseSeconds": "lease_seconds",
            "maxAttempts": "max_attempts",
            "maxSkipsBeforeFlag": "max_skips_before_flag",
            "identifyQuorum": "identify_quorum",
            "selfExclusionEnabled": "self_exclusion",
        }
        for key, attr in mapping.items():
            if key in value:
                setattr(cfg, attr, value[key])
        if cfg.lease_seconds <= 0 or cfg.max_attempts <= 0 or cfg.identify_quorum <= 0:
            raise ValueError("scheduler limits must be positive")
        return cfg


def authored_artifacts(project: ProjectRecord, worker_id: str, task: MicrotaskRecord) -> bool:
    """True when the worker wrote content this microtask would judge."""
    fid = task.function_id
    if task.kind == "WriteTest":
        bid = task.refs.get("behaviorId")
        b = project.behaviors.get(bid) if bid else None
        return b is not None and b.author_worker == worker_id
    if task.kind == "ImplementBehavior":
        for bid in project.active_assertions(fid):
            test = project.tests[project.behaviors[bid].test_id]
            if test.author_worker == worker_id:
                return True
        return False
    if task.kind == "DebugFailure":
        impl = project.implementations.get(fid)
        return impl is not None and impl.author_worker == worker_id
    if task.kind == "ResolveConflict":
        cid = task.refs.get("conflictId")
        conflict = project.conflicts.get(cid) if cid else None
        if conflict is None:
            return False
        for bid, _idx in (conflict.side_a, conflict.side_b):
            b = project.behaviors.get(bid)
            if b is not None and b.test_id is not None:
                if project.tests[b.test_id].author_worker == worker_id:
                    return True
        return False
    return False


def eligible(
    project: ProjectRecord,
    task: MicrotaskRecord,
    worker_id: str,
    config: SchedulerConfig,
) -> bool:
    if task.state != "Queued":
        return False
    fid = task.function_id
    # One writer at a time per function: nothing that mutates the
    # implementation may start while another such task is checked out.
    if task.kind in WRITER_KINDS and project.inflight_writer(fid) is not None:
        return False
    # Implementation work waits until every contradiction is settled.
    if task.kind == "ImplementBehavior" and project.open_conflicts(fid):
        return False
    if config.self_exclusion and authored_artifacts(project, worker_id, task):
        return False
    return True


def select_next(
    state: ServiceState,
    worker_id: str,
    config: SchedulerConfig,
) -> Optional[tuple[ProjectRecord, MicrotaskRecord]]:
    """Highest priority class first, then FIFO by enqueue order.

    Queues from distinct projects interleave by class; ties break toward the
    older project so selection stays deterministic.
    """
    candidates: list[tuple[int, int, int, ProjectRecord, MicrotaskRecord]] = []
    for pid in sorted(state.projects, key=ordinal_of):
        project = state.projects[pid]
        for task in project.queue_entries():
            if eligible(project, task, worker_id, config):
                candidates.append(
                    (PRIORITY_BY_KIND[task.kind], ordinal_of(pid), task.enqueue_seq, project, task)
                )
    if not candidates:
        return None
    best = min(candidates, key=lambda row: row[:3])
    return best[3], best[4]


def expired_leases(state: ServiceState, now_millis: int) -> list[tuple[str, str]]:
    """(projectId, microtaskId) pairs whose lease has lapsed, oldest ids first."""
    out: list[tuple[str, str]] = []
    for pid in sorted(state.projects, key=ordinal_of):
        project = state.projects[pid]
        for mid in sorted(project.microtasks, key=ordinal_of):
            task = project.microtasks[mid]
            if task.state == "Assigned" and task.lease_expiry is not None:
                if now_millis >= task.lease_expiry:
                    out.append((pid, mid))
    return out
