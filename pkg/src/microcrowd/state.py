"""Folded service state: the single place where entity state mutates.

`ServiceState.apply` consumes events in seq order and enforces the fixed
transition relation on every state change. Replaying a log through a fresh
ServiceState must produce byte-identical canonical serialization to the live
instance that emitted it; tests rely on that equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CorruptLog
from .events import Event
from .model import PRIORITY_BY_KIND, WRITER_KINDS, ordinal_of
from .transitions import require_transition
from .values import Value, canonical_text, canonicalize, parse_value

__all__ = [
    "FunctionRecord",
    "BehaviorRecord",
    "TestRecord",
    "ImplementationRecord",
    "MicrotaskRecord",
    "ConflictRecord",
    "ProjectRecord",
    "ServiceState",
]


@dataclass(slots=True)
class FunctionRecord:
    id: str
    name: str
    description: str
    params: list  # [[fieldName, scalarType], ...]
    return_type: str
    origin: dict  # {"kind": "EndpointRoot"|"PseudoCall", "ref": str}
    state: str = "Specified"
    behavior_ids: list = field(default_factory=list)
    no_more_workers: list = field(default_factory=list)

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "params": self.params,
            "returnType": self.return_type,
            "origin": self.origin,
            "state": self.state,
            "behaviorIds": self.behavior_ids,
            "noMoreWorkers": self.no_more_workers,
        }


@dataclass(slots=True)
class BehaviorRecord:
    id: str
    function_id: str
    statement: str
    author_worker: str
    state: str = "Identified"
    test_id: str | None = None
    revision_pending: bool = False

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "functionId": self.function_id,
            "statement": self.statement,
            "authorWorker": self.author_worker,
            "state": self.state,
            "testId": self.test_id,
            "revisionPending": self.revision_pending,
        }


@dataclass(slots=True)
class TestRecord:
    id: str
    behavior_id: str
    function_id: str
    assertions: list  # [{"args": [...], "expected": ...}, ...]
    author_worker: str
    version: int

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "behaviorId": self.behavior_id,
            "functionId": self.function_id,
            "assertions": self.assertions,
            "authorWorker": self.author_worker,
            "version": self.version,
        }


@dataclass(slots=True)
class ImplementationRecord:
    function_id: str
    kind: str
    entries: dict
    default: Value
    source: str
    language_tag: str
    version: int
    author_worker: str
    declared_pseudo_calls: list

    def to_value(self) -> dict:
        return {
            "functionId": self.function_id,
            "kind": self.kind,
            "entries": self.entries,
            "default": self.default,
            "source": self.source,
            "languageTag": self.language_tag,
            "version": self.version,
            "authorWorker": self.author_worker,
            "declaredPseudoCalls": self.declared_pseudo_calls,
        }


@dataclass(slots=True)
class MicrotaskRecord:
    id: str
    kind: str
    function_id: str
    refs: dict  # behaviorId / conflictId / report, by kind
    state: str = "Queued"
    attempt: int = 1
    assigned_worker: str | None = None
    lease_expiry: int | None = None  # ms
    created_at: int = 0
    assigned_at: int | None = None
    completed_at: int | None = None
    skip_count: int = 0
    enqueue_seq: int | None = None

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "functionId": self.function_id,
            "refs": self.refs,
            "state": self.state,
            "attempt": self.attempt,
            "assignedWorker": self.assigned_worker,
            "leaseExpiry": self.lease_expiry,
            "createdAt": self.created_at,
            "assignedAt": self.assigned_at,
            "completedAt": self.completed_at,
            "skipCount": self.skip_count,
            "enqueueSeq": self.enqueue_seq,
        }

    @property
    def open(self) -> bool:
        return self.state in ("Queued", "Assigned")


@dataclass(slots=True)
class ConflictRecord:
    id: str
    function_id: str
    side_a: list  # [behaviorId, assertionIndex]
    side_b: list
    args: list
    expected_a: Value
    expected_b: Value
    state: str = "Open"
    ticket_id: str | None = None
    note: str = ""

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "functionId": self.function_id,
            "sideA": self.side_a,
            "sideB": self.side_b,
            "args": self.args,
            "expectedA": self.expected_a,
            "expectedB": self.expected_b,
            "state": self.state,
            "ticketId": self.ticket_id,
            "note": self.note,
        }

    def pair_key(self) -> tuple:
        return (tuple(self.side_a), tuple(self.side_b))


@dataclass(slots=True)
class ProjectRecord:
    id: str
    name: str
    endpoints: list  # endpoint value dicts, creation order
    created_at: int = 0
    functions: dict = field(default_factory=dict)
    behaviors: dict = field(default_factory=dict)
    tests: dict = field(default_factory=dict)
    implementations: dict = field(default_factory=dict)
    microtasks: dict = field(default_factory=dict)
    conflicts: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)  # letter -> last ordinal
    enqueue_counter: int = 0
    completed: bool = False

    # --- id helpers ---------------------------------------------------------

    def bump(self, letter: str, entity_id: str) -> None:
        n = ordinal_of(entity_id)
        if n > self.counters.get(letter, 0):
            self.counters[letter] = n

    def next_id(self, letter: str) -> str:
        n = self.counters.get(letter, 0) + 1
        return f"{self.id}-{letter}{n}"

    # --- derived views ------------------------------------------------------

    def queue_entries(self) -> list[MicrotaskRecord]:
        queued = [m for m in self.microtasks.values() if m.state == "Queued"]
        queued.sort(key=lambda m: (PRIORITY_BY_KIND[m.kind], m.enqueue_seq))
        return queued

    def open_microtasks(self, function_id: str | None = None) -> list[MicrotaskRecord]:
        return [
            m
            for m in self.microtasks.values()
            if m.open and (function_id is None or m.function_id == function_id)
        ]

    def open_writer_tasks(self, function_id: str) -> list[MicrotaskRecord]:
        return [m for m in self.open_microtasks(function_id) if m.kind in WRITER_KINDS]

    def inflight_writer(self, function_id: str) -> MicrotaskRecord | None:
        for m in self.microtasks.values():
            if m.function_id == function_id and m.kind in WRITER_KINDS and m.state == "Assigned":
                return m
        return None

    def open_conflicts(self, function_id: str | None = None) -> list[ConflictRecord]:
        return [
            c
            for c in self.conflicts.values()
            if c.state == "Open" and (function_id is None or c.function_id == function_id)
        ]

    def behavior_conflicts(self, behavior_id: str) -> list[ConflictRecord]:
        return [
            c
            for c in self.open_conflicts()
            if behavior_id in (c.side_a[0], c.side_b[0])
        ]

    def active_assertions(self, function_id: str) -> dict[str, list]:
        """behaviorId -> assertion dicts, for non-retired behaviors whose test
        is present and not reopened for revision. Creation order."""
        fn = self.functions[function_id]
        out: dict[str, list] = {}
        for bid in fn.behavior_ids:
            b = self.behaviors[bid]
            if b.state == "Retired" or b.test_id is None or b.revision_pending:
                continue
            out[bid] = self.tests[b.test_id].assertions
        return out

    def stuck_ids(self, max_attempts: int) -> list[str]:
        return sorted(
            (m.id for m in self.microtasks.values() if m.state == "Queued" and m.attempt > max_attempts),
            key=ordinal_of,
        )

    def attention_ids(self, max_skips: int) -> list[str]:
        return sorted(
            (m.id for m in self.microtasks.values() if m.open and m.skip_count >= max_skips),
            key=ordinal_of,
        )

    def to_value(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "endpoints": self.endpoints,
            "createdAt": self.created_at,
            "functions": {k: v.to_value() for k, v in self.functions.items()},
            "behaviors": {k: v.to_value() for k, v in self.behaviors.items()},
            "tests": {k: v.to_value() for k, v in self.tests.items()},
            "implementations": {k: v.to_value() for k, v in self.implementations.items()},
            "microtasks": {k: v.to_value() for k, v in self.microtasks.items()},
            "conflicts": {k: v.to_value() for k, v in self.conflicts.items()},
            "counters": self.counters,
            "enqueueCounter": self.enqueue_counter,
            "completed": self.completed,
        }


def _project_from_value(doc: dict) -> ProjectRecord:
    project = ProjectRecord(
        id=doc["id"], name=doc["name"], endpoints=doc["endpoints"], created_at=doc["createdAt"]
    )
    for fid, f in doc["functions"].items():
        project.functions[fid] = FunctionRecord(
            id=f["id"],
            name=f["name"],
            description=f["description"],
            params=f["params"],
            return_type=f["returnType"],
            origin=f["origin"],
            state=f["state"],
            behavior_ids=list(f["behaviorIds"]),
            no_more_workers=list(f["noMoreWorkers"]),
        )
    for bid, b in doc["behaviors"].items():
        project.behaviors[bid] = BehaviorRecord(
            id=b["id"],
            function_id=b["functionId"],
            statement=b["statement"],
            author_worker=b["authorWorker"],
            state=b["state"],
            test_id=b["testId"],
            revision_pending=b["revisionPending"],
        )
    for tid, t in doc["tests"].items():
        project.tests[tid] = TestRecord(
            id=t["id"],
            behavior_id=t["behaviorId"],
            function_id=t["functionId"],
            assertions=t["assertions"],
            author_worker=t["authorWorker"],
            version=t["version"],
        )
    for fid, impl in doc["implementations"].items():
        project.implementations[fid] = ImplementationRecord(
            function_id=impl["functionId"],
            kind=impl["kind"],
            entries=impl["entries"],
            default=impl["default"],
            source=impl["source"],
            language_tag=impl["languageTag"],
            version=impl["version"],
            author_worker=impl["authorWorker"],
            declared_pseudo_calls=impl["declaredPseudoCalls"],
        )
    for mid, m in doc["microtasks"].items():
        project.microtasks[mid] = MicrotaskRecord(
            id=m["id"],
            kind=m["kind"],
            function_id=m["functionId"],
            refs=m["refs"],
            state=m["state"],
            attempt=m["attempt"],
            assigned_worker=m["assignedWorker"],
            lease_expiry=m["leaseExpiry"],
            created_at=m["createdAt"],
            assigned_at=m["assignedAt"],
            completed_at=m["completedAt"],
            skip_count=m["skipCount"],
            enqueue_seq=m["enqueueSeq"],
        )
    for cid, c in doc["conflicts"].items():
        project.conflicts[cid] = ConflictRecord(
            id=c["id"],
            function_id=c["functionId"],
            side_a=c["sideA"],
            side_b=c["sideB"],
            args=c["args"],
            expected_a=c["expectedA"],
            expected_b=c["expectedB"],
            state=c["state"],
            ticket_id=c["ticketId"],
            note=c["note"],
        )
    project.counters = dict(doc["counters"])
    project.enqueue_counter = doc["enqueueCounter"]
    project.completed = doc["completed"]
    return project


class ServiceState:
    """Mutable fold target over the whole event log."""

    def __init__(self) -> None:
        self.projects: dict[str, ProjectRecord] = {}
        self.project_counter = 0
        self.last_seq = 0

    # --- serialization ------------------------------------------------------

    def to_value(self) -> dict:
        return {
            "projects": {pid: p.to_value() for pid, p in self.projects.items()},
            "projectCounter": self.project_counter,
            "lastSeq": self.last_seq,
        }

    def canonical_bytes(self) -> bytes:
        return canonicalize(self.to_value())

    @classmethod
    def from_value(cls, doc: Value) -> "ServiceState":
        if not isinstance(doc, dict):
            raise CorruptLog("state document must be an object")
        state = cls()
        state.project_counter = doc["projectCounter"]
        state.last_seq = doc["lastSeq"]
        for pid, pdoc in doc["projects"].items():
            state.projects[pid] = _project_from_value(pdoc)
        return state

    @classmethod
    def from_canonical(cls, raw: bytes | str) -> "ServiceState":
        return cls.from_value(parse_value(raw))

    # --- helpers -------------------------------------------------------------

    def project_of(self, event: Event) -> ProjectRecord:
        return self.projects[event.payload["projectId"]]

    def _move_behavior(self, behavior: BehaviorRecord, to_state: str) -> None:
        if behavior.state != to_state:
            require_transition("Behavior", behavior.state, to_state)
            behavior.state = to_state

    def _move_microtask(self, microtask: MicrotaskRecord, to_state: str) -> None:
        require_transition("Microtask", microtask.state, to_state)
        microtask.state = to_state

    def _move_function(self, fn: FunctionRecord, to_state: str) -> None:
        require_transition("FunctionSpec", fn.state, to_state)
        fn.state = to_state

    def _enqueue(self, project: ProjectRecord, microtask: MicrotaskRecord) -> None:
        project.enqueue_counter += 1
        microtask.enqueue_seq = project.enqueue_counter
        microtask.assigned_worker = None
        microtask.lease_expiry = None

    # --- fold ----------------------------------------------------------------

    def apply(self, event: Event) -> None:
        if event.seq != self.last_seq + 1:
            raise CorruptLog(f"gap in event log: expected seq {self.last_seq + 1}, got {event.seq}")
        handler = getattr(self, f"_on_{_snake(event.kind)}")
        handler(event)
        self.last_seq = event.seq

    def _on_project_created(self, event: Event) -> None:
        p = event.payload
        project = ProjectRecord(
            id=p["projectId"], name=p["name"], endpoints=p["endpoints"], created_at=event.timestamp
        )
        self.projects[project.id] = project
        n = ordinal_of(project.id)
        if n > self.project_counter:
            self.project_counter = n

    def _on_function_spec_added(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        project.functions[p["functionId"]] = FunctionRecord(
            id=p["functionId"],
            name=p["name"],
            description=p["description"],
            params=p["params"],
            return_type=p["returnType"],
            origin=p["origin"],
        )
        project.bump("f", p["functionId"])

    def _on_behavior_added(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        behavior = BehaviorRecord(
            id=p["behaviorId"],
            function_id=p["functionId"],
            statement=p["statement"],
            author_worker=p["authorWorkerId"],
        )
        project.behaviors[behavior.id] = behavior
        fn = project.functions[behavior.function_id]
        fn.behavior_ids.append(behavior.id)
        if fn.state == "Specified":
            self._move_function(fn, "InProgress")
        project.bump("b", behavior.id)

    def _on_test_stored(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        behavior = project.behaviors[p["behaviorId"]]
        project.tests[p["testId"]] = TestRecord(
            id=p["testId"],
            behavior_id=p["behaviorId"],
            function_id=p["functionId"],
            assertions=p["assertions"],
            author_worker=p["authorWorkerId"],
            version=p["version"],
        )
        behavior.test_id = p["testId"]
        behavior.revision_pending = False
        if behavior.state == "Identified":
            self._move_behavior(behavior, "Tested")
        project.bump("t", p["testId"])

    def _on_implementation_stored(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        project.implementations[p["functionId"]] = ImplementationRecord(
            function_id=p["functionId"],
            kind=p["kind"],
            entries=p.get("entries", {}),
            default=p.get("default"),
            source=p.get("source", ""),
            language_tag=p.get("languageTag", ""),
            version=p["version"],
            author_worker=p["authorWorkerId"],
            declared_pseudo_calls=p["declaredPseudoCalls"],
        )

    def _on_suite_ran(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        outcome_by_behavior: dict[str, bool] = {}
        for entry in p["results"]:
            bid = entry["behaviorId"]
            passed = entry["status"] == "Pass"
            outcome_by_behavior[bid] = outcome_by_behavior.get(bid, True) and passed
        for bid, all_pass in outcome_by_behavior.items():
            behavior = project.behaviors[bid]
            # behaviors with zero active assertions never appear in results,
            # so an all-pass entry here is a genuine, non-vacuous pass
            if all_pass and behavior.state == "Tested":
                self._move_behavior(behavior, "Passing")

    def _on_conflict_opened(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        conflict = ConflictRecord(
            id=p["conflictId"],
            function_id=p["functionId"],
            side_a=p["sideA"],
            side_b=p["sideB"],
            args=p["args"],
            expected_a=p["expectedA"],
            expected_b=p["expectedB"],
        )
        project.conflicts[conflict.id] = conflict
        for bid in (conflict.side_a[0], conflict.side_b[0]):
            behavior = project.behaviors[bid]
            # Passing participants keep their state: the open resolve ticket
            # still blocks completion (no legal Passing -> Conflicted edge)
            if behavior.state == "Tested":
                self._move_behavior(behavior, "Conflicted")
        project.bump("c", conflict.id)

    def _on_conflict_resolved(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        conflict = project.conflicts[p["conflictId"]]
        conflict.state = "Resolved"
        conflict.note = p.get("note", "")
        for bid in (conflict.side_a[0], conflict.side_b[0]):
            behavior = project.behaviors[bid]
            if behavior.state == "Conflicted" and not project.behavior_conflicts(bid):
                self._move_behavior(behavior, "Tested")

    def _on_behavior_retired(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        behavior = project.behaviors[p["behaviorId"]]
        self._move_behavior(behavior, "Retired")
        behavior.revision_pending = False

    def _on_microtask_queued(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        microtask = MicrotaskRecord(
            id=p["microtaskId"],
            kind=p["kind"],
            function_id=p["functionId"],
            refs=p["refs"],
            created_at=event.timestamp,
        )
        project.microtasks[microtask.id] = microtask
        self._enqueue(project, microtask)
        if microtask.kind == "ResolveConflict" and "conflictId" in microtask.refs:
            project.conflicts[microtask.refs["conflictId"]].ticket_id = microtask.id
        project.bump("m", microtask.id)

    def _on_microtask_assigned(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        microtask = project.microtasks[p["microtaskId"]]
        self._move_microtask(microtask, "Assigned")
        microtask.assigned_worker = p["workerId"]
        microtask.lease_expiry = p["leaseExpiry"]
        microtask.assigned_at = event.timestamp
        microtask.enqueue_seq = None

    def _on_microtask_skipped(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        microtask = project.microtasks[p["microtaskId"]]
        self._move_microtask(microtask, "Skipped")
        self._move_microtask(microtask, "Queued")
        microtask.skip_count += 1
        self._enqueue(project, microtask)

    def _on_microtask_timed_out(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        microtask = project.microtasks[p["microtaskId"]]
        self._move_microtask(microtask, "TimedOut")
        self._move_microtask(microtask, "Queued")
        microtask.attempt += 1
        self._enqueue(project, microtask)

    def _on_submission_applied(self, event: Event) -> None:
        p = event.payload
        project = self.project_of(event)
        microtask = project.microtasks[p["microtaskId"]]
        self._move_microtask(microtask, "Submitted")
        if p["disposition"] == "completed":
            self._move_microtask(microtask, "Completed")
            microtask.completed_at = event.timestamp
            microtask.assigned_worker = None
            microtask.lease_expiry = None
        else:
            self._move_microtask(microtask, "Queued")
            microtask.attempt += 1
            self._enqueue(project, microtask)
        marks = p.get("marks", {})
        if marks.get("noMoreBy"):
            fn = project.functions[microtask.function_id]
            if marks["noMoreBy"] not in fn.no_more_workers:
                fn.no_more_workers.append(marks["noMoreBy"])
        if marks.get("reopenTestOf"):
            project.behaviors[marks["reopenTestOf"]].revision_pending = True
        for bid, text in marks.get("editedStatements", {}).items():
            project.behaviors[bid].statement = text

    def _on_function_completed(self, event: Event) -> None:
        project = self.project_of(event)
        fn = project.functions[event.payload["functionId"]]
        self._move_function(fn, "Complete")

    def _on_project_completed(self, event: Event) -> None:
        self.project_of(event).completed = True


def _snake(kind: str) -> str:
    out = []
    for ch in kind:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def fold(events: list[Event], base: ServiceState | None = None) -> ServiceState:
    state = base if base is not None else ServiceState()
    for event in events:
        state.apply(event)
    return state
