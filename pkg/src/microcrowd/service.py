"""Serialized orchestration facade over the engine, scheduler and store.

One re-entrant lock guards every mutating call; each call stages events that
apply to live state immediately and land in the log as one atomic commit.
If anything goes wrong after staging began, the live state is rebuilt from
the durable log, so memory never drifts from disk.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field

from . import engine
from .bundle import build_bundle
from .clock import ManualClock, SystemClock
from .errors import BadRequest, DomainError, NotFound
from .events import Event, proto
from .harness import DEFAULT_CASE_TIMEOUT_MS, SUITE_CAP_MS, run_suite
from .metrics import compute_metrics
from .model import MICROTASK_KINDS, parse_submission_body
from .scheduler import SchedulerConfig, expired_leases, select_next
from .state import ServiceState
from .store import EventStore

__all__ = ["ServiceConfig", "WorkerRecord", "Orchestrator", "DEFAULT_ADAPTERS"]

DEFAULT_ADAPTERS = {"python": [sys.executable, "-m", "microcrowd.runner_py"]}


@dataclass
class ServiceConfig:
    listen_address: str = "127.0.0.1:8750"
    client_tokens: list = field(default_factory=list)
    worker_tokens: list = field(default_factory=list)
    log_path: str = "events.log"
    snapshot_path: str | None = None
    clock_mode: str = "system"  # "system" | "manual"
    fsync: bool = False
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    runner_adapters: dict = field(default_factory=lambda: dict(DEFAULT_ADAPTERS))
    case_timeout_ms: int = DEFAULT_CASE_TIMEOUT_MS
    suite_cap_ms: int = SUITE_CAP_MS

    def __post_init__(self) -> None:
        overlap = set(self.client_tokens) & set(self.worker_tokens)
        if overlap:
            raise ValueError(f"client and worker tokens must be disjoint: {sorted(overlap)}")
        if self.clock_mode not in ("system", "manual"):
            raise ValueError(f"unknown clockMode {self.clock_mode!r}")

    @staticmethod
    def from_value(doc: dict) -> "ServiceConfig":
        if not isinstance(doc, dict):
            raise ValueError("config must be an object")
        auth = doc.get("authTokens", {})
        scheduler = SchedulerConfig.from_value(doc.get("scheduler", {}))
        return ServiceConfig(
            listen_address=doc.get("listenAddress", "127.0.0.1:8750"),
            client_tokens=list(auth.get("client", [])),
            worker_tokens=list(auth.get("worker", [])),
            log_path=doc.get("logPath", "events.log"),
            snapshot_path=doc.get("snapshotPath"),
            clock_mode=doc.get("clockMode", "system"),
            fsync=doc.get("fsync", False),
            scheduler=scheduler,
            runner_adapters=dict(doc.get("runnerAdapters", DEFAULT_ADAPTERS)),
            case_timeout_ms=doc.get("caseTimeoutMillis", DEFAULT_CASE_TIMEOUT_MS),
            suite_cap_ms=doc.get("suiteCapMillis", SUITE_CAP_MS),
        )


@dataclass
class WorkerRecord:
    id: str
    handle: str
    token: str
    registered_at: int
    fetched: int = 0
    completed: int = 0
    skipped: int = 0
    rejected: int = 0

    def to_value(self) -> dict:
        return {
            "workerId": self.id,
            "handle": self.handle,
            "registeredAt": self.registered_at,
            "fetched": self.fetched,
            "completed": self.completed,
            "skipped": self.skipped,
            "rejected": self.rejected,
        }


class Orchestrator:
    """All public methods are thread-safe; mutators commit atomically."""

    def __init__(self, config: ServiceConfig, clock=None):
        self.config = config
        self.scheduler_config = config.scheduler
        self.clock = clock if clock is not None else (
            ManualClock() if config.clock_mode == "manual" else SystemClock()
        )
        self.store = EventStore(config.log_path, fsync=config.fsync)
        self.state: ServiceState = self.store.replay()
        self.workers: dict[str, WorkerRecord] = {}
        self._worker_counter = 0
        self._lock = threading.RLock()
        self._staged: list | None = None
        self._commit_ts = 0

    # --- commit plumbing ------------------------------------------------------

    def stage(self, kind: str, /, **payload) -> None:
        if self._staged is None:
            raise RuntimeError("stage() called outside a commit")
        seq = self.state.last_seq + 1
        event = Event(seq=seq, commit=0, timestamp=self._commit_ts, kind=kind, payload=payload)
        self.state.apply(event)
        self._staged.append(proto(kind, **payload))

    def run_suite(self, implementation, assertions_by_behavior, function_id):
        return run_suite(
            implementation,
            assertions_by_behavior,
            function_id=function_id,
            adapters=self.config.runner_adapters,
            case_timeout_ms=self.config.case_timeout_ms,
            suite_cap_ms=self.config.suite_cap_ms,
            clock=self.clock if self.clock.mode == "system" else None,
        )

    def _commit(self, work):
        with self._lock:
            if self._staged is not None:
                raise RuntimeError("nested commit")
            self._staged = []
            self._commit_ts = self.clock.now()
            try:
                result = work()
            except BaseException:
                if self._staged:
                    # staged events touched live state but never reached disk
                    self.state = self.store.replay()
                self._staged = None
                raise
            protos, self._staged = self._staged, None
            if protos:
                try:
                    events = self.store.stamp(protos, self._commit_ts)
                    self.store.append(events)
                except BaseException:
                    self.state = self.store.replay()
                    raise
                self._tally(events)
            return result

    def _tally(self, events: list[Event]) -> None:
        for event in events:
            p = event.payload
            if event.kind == "MicrotaskAssigned":
                w = self.workers.get(p["workerId"])
                if w:
                    w.fetched += 1
            elif event.kind == "MicrotaskSkipped":
                w = self.workers.get(p["workerId"])
                if w:
                    w.skipped += 1
            elif event.kind == "SubmissionApplied":
                w = self.workers.get(p["workerId"])
                if w:
                    if p["disposition"] == "completed":
                        w.completed += 1
                    else:
                        w.rejected += 1

    # --- lookups ---------------------------------------------------------------

    def _project(self, project_id: str):
        project = self.state.projects.get(project_id)
        if project is None:
            raise NotFound(f"unknown project {project_id!r}", code="UnknownProject")
        return project

    def _worker(self, worker_id: str) -> WorkerRecord:
        worker = self.workers.get(worker_id)
        if worker is None:
            raise NotFound(f"unknown worker {worker_id!r}", code="UnknownWorker")
        return worker

    def _find_microtask(self, microtask_id: str):
        pid = microtask_id.split("-", 1)[0]
        project = self.state.projects.get(pid)
        if project is None or microtask_id not in project.microtasks:
            raise NotFound(f"unknown microtask {microtask_id!r}", code="UnknownMicrotask")
        return project, project.microtasks[microtask_id]

    def _assignment_of(self, worker_id: str):
        for project in self.state.projects.values():
            for task in project.microtasks.values():
                if task.state == "Assigned" and task.assigned_worker == worker_id:
                    return project, task
        return None

    def _reclaim_expired(self) -> list[str]:
        reclaimed = []
        for pid, mid in expired_leases(self.state, self.clock.now()):
            task = self.state.projects[pid].microtasks[mid]
            self.stage(
                "MicrotaskTimedOut",
                projectId=pid,
                microtaskId=mid,
                workerId=task.assigned_worker,
            )
            reclaimed.append(mid)
        return reclaimed

    # --- client operations -------------------------------------------------------

    def create_project(self, raw_spec) -> dict:
        def work():
            pid = engine.create_project(self, raw_spec)
            return self.project_status_locked(pid)

        return self._commit(work)

    def project_status(self, project_id: str) -> dict:
        with self._lock:
            self._project(project_id)
            return self.project_status_locked(project_id)

    def project_status_locked(self, project_id: str) -> dict:
        project = self._project(project_id)
        cfg = self.config.scheduler
        functions = []
        for fid in sorted(project.functions, key=lambda f: _ord(f)):
            fn = project.functions[fid]
            impl = project.implementations.get(fid)
            behaviors = []
            for bid in fn.behavior_ids:
                b = project.behaviors[bid]
                test = project.tests.get(b.test_id) if b.test_id else None
                behaviors.append(
                    {
                        "behaviorId": b.id,
                        "statement": b.statement,
                        "state": b.state,
                        "testId": b.test_id,
                        "testVersion": test.version if test else None,
                        "revisionPending": b.revision_pending,
                    }
                )
            functions.append(
                {
                    "functionId": fn.id,
                    "name": fn.name,
                    "description": fn.description,
                    "params": fn.params,
                    "returnType": fn.return_type,
                    "origin": fn.origin,
                    "state": fn.state,
                    "behaviors": behaviors,
                    "implementationVersion": impl.version if impl else None,
                    "noMoreCount": len(fn.no_more_workers),
                }
            )
        queue_depths = {kind: 0 for kind in MICROTASK_KINDS}
        open_tasks = []
        for task in sorted(project.microtasks.values(), key=lambda m: _ord(m.id)):
            if task.state == "Queued":
                queue_depths[task.kind] += 1
            if task.open:
                open_tasks.append(
                    {
                        "microtaskId": task.id,
                        "kind": task.kind,
                        "state": task.state,
                        "functionId": task.function_id,
                        "attempt": task.attempt,
                        "skipCount": task.skip_count,
                        "assignedWorker": task.assigned_worker,
                        "leaseExpiry": task.lease_expiry,
                    }
                )
        return {
            "projectId": project.id,
            "name": project.name,
            "completed": project.completed,
            "createdAt": project.created_at,
            "functions": functions,
            "queueDepths": queue_depths,
            "openMicrotasks": open_tasks,
            "openConflicts": [c.to_value() for c in project.open_conflicts()],
            "flags": {
                "stuck": project.stuck_ids(cfg.max_attempts),
                "attention": project.attention_ids(cfg.max_skips_before_flag),
            },
        }

    def status_report(self, project_id: str) -> dict:
        """Status document with the metrics report folded in, one lock hold."""
        with self._lock:
            self._project(project_id)
            doc = self.project_status_locked(project_id)
            doc["metrics"] = compute_metrics(self.store.events, project_id)
            return doc

    def metrics(self, project_id: str) -> dict:
        with self._lock:
            self._project(project_id)
            return compute_metrics(self.store.events, project_id)

    def bundle_doc(self, project_id: str) -> dict:
        with self._lock:
            self._project(project_id)
            return build_bundle(self.store.events, project_id)

    # --- worker operations ---------------------------------------------------------

    def register_worker(self, handle: str = "") -> dict:
        with self._lock:
            self._worker_counter += 1
            wid = f"w{self._worker_counter}"
            worker = WorkerRecord(
                id=wid,
                handle=handle or wid,
                token=f"wtoken-{wid}",
                registered_at=self.clock.now(),
            )
            self.workers[wid] = worker
            return {"workerId": wid, "token": worker.token}

    def fetch(self, worker_id: str) -> dict:
        def work():
            self._worker(worker_id)
            self._reclaim_expired()
            if self._assignment_of(worker_id) is not None:
                raise DomainError(
                    f"worker {worker_id} already holds an assignment", code="AlreadyAssigned"
                )
            selection = select_next(self.state, worker_id, self.config.scheduler)
            if selection is None:
                return {"microtask": None}
            project, task = selection
            lease_expiry = self.clock.now() + self.config.scheduler.lease_seconds * 1000
            self.stage(
                "MicrotaskAssigned",
                projectId=project.id,
                microtaskId=task.id,
                workerId=worker_id,
                leaseExpiry=lease_expiry,
            )
            return {"microtask": self._assignment_view(project, task, worker_id)}

        return self._commit(work)

    def submit(self, worker_id: str, microtask_id: str, raw_body) -> dict:
        def work():
            self._worker(worker_id)
            project, task = self._find_microtask(microtask_id)
            body = parse_submission_body(raw_body)
            return engine.apply_submission(self, project, task, worker_id, body)

        return self._commit(work)

    def skip(self, worker_id: str, microtask_id: str) -> dict:
        def work():
            self._worker(worker_id)
            project, task = self._find_microtask(microtask_id)
            if task.state != "Assigned":
                raise DomainError(f"microtask is {task.state}, not Assigned", code="StaleMicrotask")
            if task.assigned_worker != worker_id:
                raise DomainError(
                    "microtask is assigned to a different worker", code="NotAssignee"
                )
            self.stage(
                "MicrotaskSkipped",
                projectId=project.id,
                microtaskId=task.id,
                workerId=worker_id,
            )
            return {
                "status": "skipped",
                "microtaskId": task.id,
                "skipCount": task.skip_count,
                "attention": task.skip_count >= self.config.scheduler.max_skips_before_flag,
            }

        return self._commit(work)

    # --- clock (manual mode) ----------------------------------------------------------

    def set_clock(self, millis: int) -> dict:
        if self.clock.mode != "manual":
            raise DomainError("clock is not in manual mode", code="ClockNotManual")
        if not isinstance(millis, int) or isinstance(millis, bool):
            raise BadRequest("clock millis must be an integer")

        def work():
            try:
                self.clock.set(millis)
            except ValueError as exc:
                raise BadRequest(str(exc)) from None
            reclaimed = self._reclaim_expired()
            return {"now": self.clock.now(), "reclaimed": reclaimed}

        return self._commit(work)

    # --- assignment views ----------------------------------------------------------

    def _assignment_view(self, project, task, worker_id: str) -> dict:
        fn = project.functions[task.function_id]
        view = {
            "microtaskId": task.id,
            "projectId": project.id,
            "kind": task.kind,
            "attempt": task.attempt,
            "skipCount": task.skip_count,
            "leaseExpiry": task.lease_expiry,
            "function": {
                "functionId": fn.id,
                "name": fn.name,
                "description": fn.description,
                "params": fn.params,
                "returnType": fn.return_type,
                "state": fn.state,
            },
        }
        if task.kind == "IdentifyBehavior":
            view["behaviors"] = [
                {
                    "behaviorId": bid,
                    "statement": project.behaviors[bid].statement,
                    "state": project.behaviors[bid].state,
                }
                for bid in fn.behavior_ids
            ]
            view["noMoreCount"] = len(fn.no_more_workers)
            view["identifyQuorum"] = self.config.scheduler.identify_quorum
            view["alreadyDeclared"] = worker_id in fn.no_more_workers
        elif task.kind == "WriteTest":
            b = project.behaviors[task.refs["behaviorId"]]
            test = project.tests.get(b.test_id) if b.test_id else None
            view["behavior"] = {
                "behaviorId": b.id,
                "statement": b.statement,
                "state": b.state,
                "revisionPending": b.revision_pending,
            }
            view["currentTest"] = (
                {"assertions": test.assertions, "version": test.version} if test else None
            )
        elif task.kind in ("ImplementBehavior", "DebugFailure"):
            impl = project.implementations.get(fn.id)
            view["currentImplementation"] = impl.to_value() if impl else None
            view["activeTests"] = [
                {
                    "behaviorId": bid,
                    "statement": project.behaviors[bid].statement,
                    "assertions": assertions,
                }
                for bid, assertions in project.active_assertions(fn.id).items()
            ]
            view["knownFunctions"] = [
                {"name": f.name, "params": f.params, "returnType": f.return_type}
                for f in sorted(project.functions.values(), key=lambda f: _ord(f.id))
            ]
            if task.kind == "DebugFailure":
                view["failureReport"] = task.refs["report"]
        elif task.kind == "ResolveConflict":
            conflict = project.conflicts[task.refs["conflictId"]]
            view["conflict"] = conflict.to_value()
            sides = []
            for bid, index in (conflict.side_a, conflict.side_b):
                b = project.behaviors[bid]
                test = project.tests.get(b.test_id) if b.test_id else None
                sides.append(
                    {
                        "behaviorId": bid,
                        "assertionIndex": index,
                        "statement": b.statement,
                        "state": b.state,
                        "assertions": test.assertions if test else [],
                        "testVersion": test.version if test else None,
                    }
                )
            view["sides"] = sides
        return view


def _ord(entity_id: str) -> tuple:
    head, _, tail = entity_id.rpartition("-")
    digits = tail.lstrip("pfbtmcw")
    return (head, int(digits) if digits.isdigit() else 0)
