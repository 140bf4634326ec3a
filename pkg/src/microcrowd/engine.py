"""Domain workflow: what each accepted submission does to a project.

Every handler runs in two phases. The validate phase reads state, may raise
a ServiceError (request-level fault, nothing committed) or a Rejection
(content fault, committed as a rejected submission plus requeue), and runs
any needed suite since adapters can fail. The effect phase only stages
events; staged events apply to live state immediately, so later staging in
the same commit sees their results. Handlers never raise after staging.

Suite policy: any commit that changes the implementation or the active
assertion set stages a fresh SuiteRan over the post-change set, computed
prospectively before staging, whenever an implementation exists and the
set is non-empty. Failures guarantee one open DebugFailure per function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .conflicts import filter_new, find_contradictions
from .errors import DomainError, Rejection
from .harness import build_failure_report
from .model import (
    HTTP_METHODS,
    DebugBody,
    IdentifyBody,
    ImplementBody,
    Implementation,
    PseudoCallDecl,
    ResolveBody,
    TestBody,
    parse_project_spec,
)
from .values import SCALAR_TYPES, canonical_text, parse_value, values_equal

__all__ = ["create_project", "apply_submission", "HandlerResult"]


@dataclass(slots=True)
class HandlerResult:
    marks: dict = field(default_factory=dict)
    spawned: list = field(default_factory=list)
    note: str = ""


# --- project creation ---------------------------------------------------------


def _check_schema(schema: list, where: str) -> None:
    seen = set()
    for name, scalar in schema:
        if not name:
            raise DomainError(f"{where}: empty field name", code="BadSchema")
        if scalar not in SCALAR_TYPES:
            raise DomainError(f"{where}: unknown scalar type {scalar!r}", code="BadSchema")
        if name in seen:
            raise DomainError(f"{where}: duplicate field {name!r}", code="BadSchema")
        seen.add(name)


def create_project(txn, raw) -> str:
    name, endpoints = parse_project_spec(raw)
    if not endpoints:
        raise DomainError("a project needs at least one endpoint", code="EmptyProject")
    seen_routes: set[tuple] = set()
    seen_names: set[str] = set()
    for i, ep in enumerate(endpoints):
        where = f"endpoints[{i}]"
        if ep.method not in HTTP_METHODS:
            raise DomainError(f"{where}: unsupported method {ep.method!r}", code="BadSchema")
        if not ep.path.startswith("/"):
            raise DomainError(f"{where}: path must start with '/'", code="BadSchema")
        if not ep.name:
            raise DomainError(f"{where}: endpoint name must be non-empty", code="BadSchema")
        _check_schema(ep.request_schema, f"{where}.requestSchema")
        _check_schema(ep.response_schema, f"{where}.responseSchema")
        route = (ep.method, ep.path)
        if route in seen_routes:
            raise DomainError(f"{where}: duplicate route {ep.method} {ep.path}", code="DuplicateEndpoint")
        if ep.name in seen_names:
            raise DomainError(f"{where}: duplicate endpoint name {ep.name!r}", code="DuplicateEndpoint")
        seen_routes.add(route)
        seen_names.add(ep.name)

    pid = f"p{txn.state.project_counter + 1}"
    txn.stage(
        "ProjectCreated", projectId=pid, name=name, endpoints=[ep.to_value() for ep in endpoints]
    )
    project = txn.state.projects[pid]
    for ep in endpoints:
        fid = project.next_id("f")
        txn.stage(
            "FunctionSpecAdded",
            projectId=pid,
            functionId=fid,
            name=ep.name,
            description=ep.description,
            params=ep.request_schema,
            returnType="object",
            origin={"kind": "EndpointRoot", "ref": f"{ep.method} {ep.path}"},
        )
        _spawn(txn, project, "IdentifyBehavior", fid, {})
    return pid


# --- submission entry point ----------------------------------------------------


def apply_submission(txn, project, task, worker_id: str, body) -> dict:
    if task.state == "Completed":
        raise DomainError("microtask already completed", code="StaleMicrotask")
    if task.state != "Assigned":
        raise DomainError(f"microtask is {task.state}, not Assigned", code="StaleMicrotask")
    if task.assigned_worker != worker_id:
        raise DomainError("microtask is assigned to a different worker", code="NotAssignee")
    if body.kind != task.kind:
        raise DomainError(
            f"submission kind {body.kind} does not match microtask kind {task.kind}",
            code="KindMismatch",
        )

    handler = _HANDLERS[task.kind]
    try:
        result = handler(txn, project, task, worker_id, body)
    except Rejection as rejection:
        txn.stage(
            "SubmissionApplied",
            projectId=project.id,
            microtaskId=task.id,
            workerId=worker_id,
            kind=task.kind,
            disposition="rejected",
            rejectionCode=rejection.code,
            note=rejection.message,
            marks={},
            spawned=[],
        )
        return {
            "status": "rejected",
            "code": rejection.code,
            "message": rejection.message,
            "microtaskId": task.id,
            "attempt": project.microtasks[task.id].attempt,
        }

    txn.stage(
        "SubmissionApplied",
        projectId=project.id,
        microtaskId=task.id,
        workerId=worker_id,
        kind=task.kind,
        disposition="completed",
        note=result.note,
        marks=result.marks,
        spawned=result.spawned,
    )
    epilogue_spawned = run_epilogue(txn, project, task.function_id)
    return {
        "status": "accepted",
        "microtaskId": task.id,
        "spawned": result.spawned + epilogue_spawned,
        "note": result.note,
    }


# --- shared helpers -------------------------------------------------------------


def _spawn(txn, project, kind: str, function_id: str, refs: dict) -> str:
    mid = project.next_id("m")
    txn.stage(
        "MicrotaskQueued",
        projectId=project.id,
        microtaskId=mid,
        kind=kind,
        functionId=function_id,
        refs=refs,
    )
    return mid


def _stage_suite(txn, project, report) -> None:
    txn.stage(
        "SuiteRan",
        projectId=project.id,
        functionId=report.function_id,
        implementationVersion=report.implementation_version,
        results=report.results,
        durationMillis=report.duration_millis,
    )


def _ensure_debug(txn, project, function_id: str, report, exclude: str) -> list[str]:
    """One open DebugFailure per function; the completing task doesn't count."""
    for m in project.open_microtasks(function_id):
        if m.kind == "DebugFailure" and m.id != exclude:
            return []
    mid = _spawn(
        txn, project, "DebugFailure", function_id, {"report": build_failure_report(report)}
    )
    return [mid]


def _open_new_conflicts(txn, project, function_id: str) -> list[str]:
    """Scan active assertions, open tickets for contradictions not already open."""
    witnesses = find_contradictions(project.active_assertions(function_id))
    open_keys = {c.pair_key() for c in project.open_conflicts(function_id)}
    spawned = []
    for w in filter_new(witnesses, open_keys):
        cid = project.next_id("c")
        txn.stage(
            "ConflictOpened",
            projectId=project.id,
            conflictId=cid,
            functionId=function_id,
            sideA=list(w.side_a),
            sideB=list(w.side_b),
            args=w.args,
            expectedA=w.expected_a,
            expectedB=w.expected_b,
        )
        spawned.append(_spawn(txn, project, "ResolveConflict", function_id, {"conflictId": cid}))
    return spawned


def _prospective_suite(txn, project, function_id: str, overlay: dict, remove: set):
    """Run the suite against the post-change active set, before staging.

    overlay maps behaviorId -> assertion dicts that WILL be active after this
    commit; remove lists behaviorIds that will drop out. Returns None when
    there is nothing to run (no implementation, or empty set).
    """
    impl = project.implementations.get(function_id)
    if impl is None:
        return None
    active = dict(project.active_assertions(function_id))
    for bid in remove:
        active.pop(bid, None)
    active.update(overlay)
    if not active:
        return None
    report = txn.run_suite(impl, active, function_id)
    report.implementation_version = impl.version
    return report


def _validate_pseudo_calls(project, impl: Implementation) -> list[PseudoCallDecl]:
    """Fresh declarations to spawn; re-declaring an identical signature is a no-op."""
    by_name = {fn.name: fn for fn in project.functions.values()}
    fresh: dict[str, PseudoCallDecl] = {}
    for decl in impl.declared_pseudo_calls:
        if not decl.name:
            raise Rejection("InvalidImplementation", "pseudo-call name must be non-empty")
        if decl.return_type not in SCALAR_TYPES:
            raise Rejection(
                "UnknownPseudoCallType", f"unknown return type {decl.return_type!r}"
            )
        for field_name, scalar in decl.params:
            if scalar not in SCALAR_TYPES:
                raise Rejection("UnknownPseudoCallType", f"unknown param type {scalar!r}")
            if not field_name:
                raise Rejection("InvalidImplementation", "pseudo-call param name must be non-empty")
        existing = by_name.get(decl.name)
        if existing is not None:
            existing_sig = canonical_text(
                {"params": existing.params, "returnType": existing.return_type}
            )
            if existing_sig != decl.signature():
                raise Rejection(
                    "DuplicateFunctionName",
                    f"{decl.name!r} already exists with a different signature",
                )
            continue
        prior = fresh.get(decl.name)
        if prior is not None:
            if prior.signature() != decl.signature():
                raise Rejection(
                    "DuplicateFunctionName",
                    f"{decl.name!r} declared twice with different signatures",
                )
            continue
        fresh[decl.name] = decl
    return list(fresh.values())


def _validate_table_arity(impl: Implementation, arity: int) -> None:
    if impl.kind != "Table":
        return
    for key in impl.entries:
        if len(parse_value(key)) != arity:
            raise Rejection(
                "InvalidImplementation", f"table key {key} does not match arity {arity}"
            )


def _store_implementation(txn, project, task, worker_id: str, impl: Implementation) -> list[str]:
    """Shared by ImplementBehavior and DebugFailure/FixedImplementation."""
    fn = project.functions[task.function_id]
    fresh = _validate_pseudo_calls(project, impl)
    _validate_table_arity(impl, len(fn.params))
    prior = project.implementations.get(fn.id)
    version = prior.version + 1 if prior is not None else 1

    active = project.active_assertions(fn.id)
    report = None
    if active:
        report = txn.run_suite(impl, active, fn.id)
        report.implementation_version = version

    payload: dict = {
        "projectId": project.id,
        "functionId": fn.id,
        "kind": impl.kind,
        "version": version,
        "authorWorkerId": worker_id,
        "declaredPseudoCalls": [d.to_value() for d in impl.declared_pseudo_calls],
    }
    if impl.kind == "Table":
        payload["entries"] = impl.entries
        payload["default"] = impl.default
    else:
        payload["source"] = impl.source
        payload["languageTag"] = impl.language_tag
    txn.stage("ImplementationStored", **payload)

    spawned = []
    for decl in fresh:
        fid = project.next_id("f")
        txn.stage(
            "FunctionSpecAdded",
            projectId=project.id,
            functionId=fid,
            name=decl.name,
            description=decl.description,
            params=decl.params,
            returnType=decl.return_type,
            origin={"kind": "PseudoCall", "ref": fn.id},
        )
        spawned.append(_spawn(txn, project, "IdentifyBehavior", fid, {}))
    if report is not None:
        _stage_suite(txn, project, report)
        if report.failures():
            spawned += _ensure_debug(txn, project, fn.id, report, exclude=task.id)
    return spawned


# --- kind handlers ---------------------------------------------------------------


def _on_identify(txn, project, task, worker_id: str, body: IdentifyBody) -> HandlerResult:
    fn = project.functions[task.function_id]
    if body.no_more:
        if not fn.behavior_ids:
            raise Rejection("NoBehaviors", "identify at least one behavior before closing")
        if worker_id in fn.no_more_workers:
            raise Rejection("AlreadyDeclared", "this worker already declared no more behaviors")
        spawned = []
        if len(fn.no_more_workers) + 1 < txn.scheduler_config.identify_quorum:
            spawned.append(_spawn(txn, project, "IdentifyBehavior", fn.id, {}))
        return HandlerResult(marks={"noMoreBy": worker_id}, spawned=spawned)

    statement = body.new_statement or ""
    if not statement.strip():
        raise Rejection("EmptyStatement", "behavior statement must be non-empty")
    for bid in fn.behavior_ids:
        if project.behaviors[bid].statement == statement:
            raise Rejection("DuplicateBehavior", "statement already recorded for this function")
    bid = project.next_id("b")
    txn.stage(
        "BehaviorAdded",
        projectId=project.id,
        behaviorId=bid,
        functionId=fn.id,
        statement=statement,
        authorWorkerId=worker_id,
    )
    spawned = [
        _spawn(txn, project, "WriteTest", fn.id, {"behaviorId": bid}),
        # the stream stays open until a quorum of workers closes it
        _spawn(txn, project, "IdentifyBehavior", fn.id, {}),
    ]
    return HandlerResult(spawned=spawned)


def _on_write_test(txn, project, task, worker_id: str, body: TestBody) -> HandlerResult:
    bid = task.refs["behaviorId"]
    behavior = project.behaviors[bid]
    if behavior.state == "Retired":
        # dead target: complete the ticket without effects
        return HandlerResult(note="behavior retired; nothing to test")
    if not body.assertions:
        raise Rejection("EmptyAssertions", "a test needs at least one assertion")
    fn = project.functions[behavior.function_id]
    arity = len(fn.params)
    for i, assertion in enumerate(body.assertions):
        if len(assertion.args) != arity:
            raise Rejection(
                "ArityMismatch",
                f"assertion {i} has {len(assertion.args)} args, function takes {arity}",
            )
    assertions = [a.to_value() for a in body.assertions]
    report = _prospective_suite(txn, project, fn.id, overlay={bid: assertions}, remove=set())

    if behavior.test_id is not None:
        tid = behavior.test_id
        version = project.tests[tid].version + 1
    else:
        tid = project.next_id("t")
        version = 1
    txn.stage(
        "TestStored",
        projectId=project.id,
        testId=tid,
        behaviorId=bid,
        functionId=fn.id,
        assertions=assertions,
        authorWorkerId=worker_id,
        version=version,
    )
    spawned = []
    if report is not None:
        _stage_suite(txn, project, report)
        if report.failures():
            spawned += _ensure_debug(txn, project, fn.id, report, exclude=task.id)
    spawned += _open_new_conflicts(txn, project, fn.id)
    return HandlerResult(spawned=spawned)


def _on_implement(txn, project, task, worker_id: str, body: ImplementBody) -> HandlerResult:
    spawned = _store_implementation(txn, project, task, worker_id, body.implementation)
    return HandlerResult(spawned=spawned)


def _on_debug(txn, project, task, worker_id: str, body: DebugBody) -> HandlerResult:
    fn = project.functions[task.function_id]
    if body.outcome == "FixedImplementation":
        spawned = _store_implementation(txn, project, task, worker_id, body.implementation)
        return HandlerResult(spawned=spawned, note=body.reason)

    bid = body.behavior_id
    behavior = project.behaviors.get(bid)
    if behavior is None or behavior.function_id != fn.id:
        raise Rejection("UnknownBehavior", f"{bid!r} is not a behavior of {fn.id}")

    if body.outcome == "DisputeTest":
        if behavior.state == "Retired":
            raise Rejection("UnknownBehavior", f"{bid} is retired")
        if behavior.test_id is None:
            raise Rejection("UnknownBehavior", f"{bid} has no stored test to dispute")
        report = _prospective_suite(txn, project, fn.id, overlay={}, remove={bid})
        spawned = []
        if report is not None:
            _stage_suite(txn, project, report)
            if report.failures():
                spawned += _ensure_debug(txn, project, fn.id, report, exclude=task.id)
        open_revision = any(
            m.kind == "WriteTest" and m.refs.get("behaviorId") == bid
            for m in project.open_microtasks(fn.id)
        )
        if not open_revision:
            spawned.append(_spawn(txn, project, "WriteTest", fn.id, {"behaviorId": bid}))
        return HandlerResult(
            marks={"reopenTestOf": bid}, spawned=spawned, note=body.reason
        )

    # DisputeBehavior
    if behavior.state == "Retired":
        return HandlerResult(note="behavior already retired")
    report = _prospective_suite(txn, project, fn.id, overlay={}, remove={bid})
    txn.stage(
        "BehaviorRetired",
        projectId=project.id,
        behaviorId=bid,
        reason=body.reason,
    )
    for conflict in project.behavior_conflicts(bid):
        txn.stage(
            "ConflictResolved",
            projectId=project.id,
            conflictId=conflict.id,
            note="participant retired",
        )
    spawned = []
    if report is not None:
        _stage_suite(txn, project, report)
        if report.failures():
            spawned += _ensure_debug(txn, project, fn.id, report, exclude=task.id)
    return HandlerResult(spawned=spawned, note=body.reason)


def _on_resolve(txn, project, task, worker_id: str, body: ResolveBody) -> HandlerResult:
    conflict = project.conflicts[task.refs["conflictId"]]
    if conflict.state == "Resolved":
        # dead target: the contradiction went away through another path
        return HandlerResult(note="conflict already resolved")
    fn = project.functions[task.function_id]
    participant_ids = [conflict.side_a[0], conflict.side_b[0]]
    for bid in set(body.edited_statements) | set(body.edited_tests):
        if bid not in participant_ids:
            raise Rejection("UnknownBehavior", f"{bid!r} is not a participant in {conflict.id}")

    for bid, text in body.edited_statements.items():
        if not text.strip():
            raise Rejection("EmptyStatement", "edited statement must be non-empty")
        for other in project.behaviors.values():
            if other.id != bid and other.function_id == fn.id and other.statement == text:
                raise Rejection("DuplicateBehavior", "edited statement duplicates another behavior")
    arity = len(fn.params)
    for bid, assertions in body.edited_tests.items():
        if not assertions:
            raise Rejection("EmptyAssertions", "edited test needs at least one assertion")
        for i, assertion in enumerate(assertions):
            if len(assertion.args) != arity:
                raise Rejection(
                    "ArityMismatch",
                    f"edited assertion {i} has {len(assertion.args)} args, function takes {arity}",
                )

    def assertion_after(side) -> dict | None:
        bid, index = side
        if bid in body.edited_tests:
            edited = body.edited_tests[bid]
            return edited[index].to_value() if index < len(edited) else None
        behavior = project.behaviors[bid]
        if behavior.state == "Retired" or behavior.test_id is None:
            return None
        stored = project.tests[behavior.test_id].assertions
        return stored[index] if index < len(stored) else None

    side_a = assertion_after(conflict.side_a)
    side_b = assertion_after(conflict.side_b)
    if side_a is not None and side_b is not None:
        if canonical_text(side_a["args"]) == canonical_text(side_b["args"]) and not values_equal(
            side_a["expected"], side_b["expected"]
        ):
            raise Rejection(
                "UnresolvedContradiction", "the witnessed assertions still disagree"
            )

    overlay = {
        bid: [a.to_value() for a in body.edited_tests[bid]]
        for bid in participant_ids
        if bid in body.edited_tests
    }
    report = _prospective_suite(txn, project, fn.id, overlay=overlay, remove=set())

    for bid in participant_ids:
        if bid not in body.edited_tests:
            continue
        behavior = project.behaviors[bid]
        tid = behavior.test_id
        txn.stage(
            "TestStored",
            projectId=project.id,
            testId=tid,
            behaviorId=bid,
            functionId=fn.id,
            assertions=overlay[bid],
            authorWorkerId=worker_id,
            version=project.tests[tid].version + 1,
        )
    txn.stage(
        "ConflictResolved",
        projectId=project.id,
        conflictId=conflict.id,
        note=f"resolved by {worker_id}",
    )
    marks = {"editedStatements": dict(body.edited_statements)} if body.edited_statements else {}
    spawned = []
    if report is not None:
        _stage_suite(txn, project, report)
        if report.failures():
            spawned += _ensure_debug(txn, project, fn.id, report, exclude=task.id)
    spawned += _open_new_conflicts(txn, project, fn.id)
    return HandlerResult(marks=marks, spawned=spawned)


_HANDLERS = {
    "IdentifyBehavior": _on_identify,
    "WriteTest": _on_write_test,
    "ImplementBehavior": _on_implement,
    "DebugFailure": _on_debug,
    "ResolveConflict": _on_resolve,
}


# --- post-submission epilogue -----------------------------------------------------


def run_epilogue(txn, project, function_id: str) -> list[str]:
    """Keep the pipeline moving after an accepted submission.

    Queues implementation work when tested behaviors await it, completes the
    function when nothing is left to do, and completes the project when every
    function is done. Runs after SubmissionApplied folds, so the completing
    microtask no longer counts as open.
    """
    spawned = []
    fn = project.functions[function_id]
    if fn.state != "Complete":
        if not project.open_conflicts(fn.id) and not project.open_writer_tasks(fn.id):
            has_untested_pass = any(
                project.behaviors[bid].state == "Tested"
                for bid in project.active_assertions(fn.id)
            )
            if has_untested_pass:
                spawned.append(_spawn(txn, project, "ImplementBehavior", fn.id, {}))
        # retiring the last live behavior after the identify stream closed
        # would otherwise strand the function with nothing queued
        all_retired = fn.behavior_ids and all(
            project.behaviors[bid].state == "Retired" for bid in fn.behavior_ids
        )
        if (
            all_retired
            and not project.open_microtasks(fn.id)
            and not project.open_conflicts(fn.id)
        ):
            spawned.append(_spawn(txn, project, "IdentifyBehavior", fn.id, {}))
        _maybe_complete_function(txn, project, fn, txn.scheduler_config.identify_quorum)
    _maybe_complete_project(txn, project)
    return spawned


def _maybe_complete_function(txn, project, fn, quorum: int) -> None:
    if fn.state == "Complete":
        return
    live = [project.behaviors[bid] for bid in fn.behavior_ids]
    non_retired = [b for b in live if b.state != "Retired"]
    if not non_retired:
        return
    if any(b.state != "Passing" for b in non_retired):
        return
    if len(fn.no_more_workers) < quorum:
        return
    if project.open_microtasks(fn.id):
        return
    if project.open_conflicts(fn.id):
        return
    txn.stage("FunctionCompleted", projectId=project.id, functionId=fn.id)


def _maybe_complete_project(txn, project) -> None:
    if project.completed or not project.functions:
        return
    if all(fn.state == "Complete" for fn in project.functions.values()):
        txn.stage("ProjectCompleted", projectId=project.id)
