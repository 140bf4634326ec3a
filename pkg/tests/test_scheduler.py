"""Queue discipline checked against hand-built folded states."""

from microcrowd.events import Event
from microcrowd.scheduler import SchedulerConfig, eligible, expired_leases, select_next
from microcrowd.state import fold


def build(protos):
    events = [
        Event(seq=i + 1, commit=len(protos), timestamp=0, kind=kind, payload=payload)
        for i, (kind, payload) in enumerate(protos)
    ]
    return fold(events)


def project_base(function_ids=("p1-f1",)):
    protos = [("ProjectCreated", {"projectId": "p1", "name": "x", "endpoints": []})]
    for fid in function_ids:
        protos.append(
            (
                "FunctionSpecAdded",
                {
                    "projectId": "p1",
                    "functionId": fid,
                    "name": fid,
                    "description": "",
                    "params": [["n", "number"]],
                    "returnType": "object",
                    "origin": {"kind": "EndpointRoot", "ref": ""},
                },
            )
        )
    return protos


def queued(mid, kind, fid, refs=None):
    return (
        "MicrotaskQueued",
        {"projectId": "p1", "microtaskId": mid, "kind": kind, "functionId": fid, "refs": refs or {}},
    )


def assigned(mid, wid="w9", expiry=10_000):
    return (
        "MicrotaskAssigned",
        {"projectId": "p1", "microtaskId": mid, "workerId": wid, "leaseExpiry": expiry},
    )


def completed(mid, wid="w9"):
    return (
        "SubmissionApplied",
        {
            "projectId": "p1",
            "microtaskId": mid,
            "workerId": wid,
            "kind": "IdentifyBehavior",
            "disposition": "completed",
            "marks": {},
            "spawned": [],
        },
    )


def behavior(bid, fid, author="w1"):
    return (
        "BehaviorAdded",
        {
            "projectId": "p1",
            "behaviorId": bid,
            "functionId": fid,
            "statement": f"statement {bid}",
            "authorWorkerId": author,
        },
    )


def stored_test(tid, bid, fid, author="w1"):
    return (
        "TestStored",
        {
            "projectId": "p1",
            "testId": tid,
            "behaviorId": bid,
            "functionId": fid,
            "assertions": [{"args": [1], "expected": 1}],
            "authorWorkerId": author,
            "version": 1,
        },
    )


CFG = SchedulerConfig()


class TestPriorityOrder:
    def test_classes_beat_arrival_order(self):
        fns = [f"p1-f{i}" for i in range(1, 6)]
        protos = project_base(fns)
        # enqueue lowest-priority kinds first; selection must invert that order
        protos += [
            queued("p1-m1", "IdentifyBehavior", "p1-f1"),
            queued("p1-m2", "WriteTest", "p1-f2", {"behaviorId": "p1-b9"}),
            queued("p1-m3", "ImplementBehavior", "p1-f3"),
            queued("p1-m4", "ResolveConflict", "p1-f4"),
            queued("p1-m5", "DebugFailure", "p1-f5", {"report": {}}),
        ]
        state = build(protos)
        picked = []
        for _ in range(5):
            project, task = select_next(state, "w1", CFG)
            picked.append(task.kind)
            state.apply(
                Event(
                    seq=state.last_seq + 1,
                    commit=state.last_seq + 1,
                    timestamp=0,
                    kind="MicrotaskAssigned",
                    payload=assigned(task.id)[1],
                )
            )
        assert picked == [
            "DebugFailure",
            "ResolveConflict",
            "ImplementBehavior",
            "WriteTest",
            "IdentifyBehavior",
        ]
        assert select_next(state, "w1", CFG) is None

    def test_fifo_within_class(self):
        protos = project_base() + [
            queued("p1-m1", "IdentifyBehavior", "p1-f1"),
            queued("p1-m2", "IdentifyBehavior", "p1-f1"),
        ]
        state = build(protos)
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m1"

    def test_requeue_goes_to_the_back(self):
        protos = project_base() + [
            queued("p1-m1", "IdentifyBehavior", "p1-f1"),
            queued("p1-m2", "IdentifyBehavior", "p1-f1"),
            assigned("p1-m1"),
            ("MicrotaskSkipped", {"projectId": "p1", "microtaskId": "p1-m1", "workerId": "w9"}),
        ]
        state = build(protos)
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m2"

    def test_older_project_wins_ties_within_class(self):
        protos = project_base() + [queued("p1-m1", "IdentifyBehavior", "p1-f1")]
        state = build(protos)
        more = [
            ("ProjectCreated", {"projectId": "p2", "name": "y", "endpoints": []}),
            (
                "FunctionSpecAdded",
                {
                    "projectId": "p2",
                    "functionId": "p2-f1",
                    "name": "f",
                    "description": "",
                    "params": [],
                    "returnType": "object",
                    "origin": {"kind": "EndpointRoot", "ref": ""},
                },
            ),
            (
                "MicrotaskQueued",
                {
                    "projectId": "p2",
                    "microtaskId": "p2-m1",
                    "kind": "DebugFailure",
                    "functionId": "p2-f1",
                    "refs": {},
                },
            ),
        ]
        for kind, payload in more:
            state.apply(
                Event(seq=state.last_seq + 1, commit=0, timestamp=0, kind=kind, payload=payload)
            )
        # higher class in the newer project still wins
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p2-m1"


class TestWriterExclusion:
    def test_one_writer_in_flight_per_function(self):
        protos = project_base() + [
            queued("p1-m1", "ImplementBehavior", "p1-f1"),
            queued("p1-m2", "DebugFailure", "p1-f1", {"report": {}}),
            queued("p1-m3", "IdentifyBehavior", "p1-f1"),
        ]
        state = build(protos)
        _, first = select_next(state, "w1", CFG)
        assert first.id == "p1-m2"  # debug outranks implement
        state.apply(
            Event(seq=state.last_seq + 1, commit=0, timestamp=0,
                  kind="MicrotaskAssigned", payload=assigned("p1-m2")[1])
        )
        _, second = select_next(state, "w2", CFG)
        assert second.id == "p1-m3"  # implement blocked while the debug is out
        state.apply(
            Event(seq=state.last_seq + 1, commit=0, timestamp=0,
                  kind="SubmissionApplied", payload=completed("p1-m2")[1])
        )
        _, third = select_next(state, "w2", CFG)
        assert third.id == "p1-m1"

    def test_writer_on_another_function_does_not_block(self):
        protos = project_base(("p1-f1", "p1-f2")) + [
            queued("p1-m1", "ImplementBehavior", "p1-f1"),
            queued("p1-m2", "ImplementBehavior", "p1-f2"),
            assigned("p1-m1"),
        ]
        state = build(protos)
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m2"


class TestConflictWithholding:
    def build_conflicted(self):
        protos = project_base() + [
            behavior("p1-b1", "p1-f1"),
            stored_test("p1-t1", "p1-b1", "p1-f1"),
            behavior("p1-b2", "p1-f1"),
            stored_test("p1-t2", "p1-b2", "p1-f1"),
            queued("p1-m1", "ImplementBehavior", "p1-f1"),
            queued("p1-m2", "IdentifyBehavior", "p1-f1"),
            (
                "ConflictOpened",
                {
                    "projectId": "p1",
                    "conflictId": "p1-c1",
                    "functionId": "p1-f1",
                    "sideA": ["p1-b1", 0],
                    "sideB": ["p1-b2", 0],
                    "args": [1],
                    "expectedA": 1,
                    "expectedB": 2,
                },
            ),
        ]
        return build(protos)

    def test_implement_withheld_until_conflicts_settle(self):
        state = self.build_conflicted()
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m2"  # identify, not the implement
        state.apply(
            Event(
                seq=state.last_seq + 1, commit=0, timestamp=0,
                kind="ConflictResolved",
                payload={"projectId": "p1", "conflictId": "p1-c1", "note": ""},
            )
        )
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m1"

    def test_debug_still_eligible_during_conflict(self):
        state = self.build_conflicted()
        state.apply(
            Event(
                seq=state.last_seq + 1, commit=0, timestamp=0,
                kind="MicrotaskQueued",
                payload=queued("p1-m3", "DebugFailure", "p1-f1", {"report": {}})[1],
            )
        )
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m3"


class TestSelfExclusion:
    def test_authors_skip_their_own_artifacts_when_enabled(self):
        cfg = SchedulerConfig(self_exclusion=True)
        protos = project_base() + [
            behavior("p1-b1", "p1-f1", author="w1"),
            queued("p1-m1", "WriteTest", "p1-f1", {"behaviorId": "p1-b1"}),
            queued("p1-m2", "IdentifyBehavior", "p1-f1"),
        ]
        state = build(protos)
        _, for_author = select_next(state, "w1", cfg)
        assert for_author.id == "p1-m2"  # own behavior's test excluded
        _, for_other = select_next(state, "w2", cfg)
        assert for_other.id == "p1-m1"

    def test_disabled_by_default(self):
        protos = project_base() + [
            behavior("p1-b1", "p1-f1", author="w1"),
            queued("p1-m1", "WriteTest", "p1-f1", {"behaviorId": "p1-b1"}),
        ]
        state = build(protos)
        _, task = select_next(state, "w1", CFG)
        assert task.id == "p1-m1"


class TestLeases:
    def test_expiry_is_inclusive_and_sorted(self):
        protos = project_base(("p1-f1", "p1-f2")) + [
            queued("p1-m1", "IdentifyBehavior", "p1-f1"),
            queued("p1-m2", "IdentifyBehavior", "p1-f2"),
            assigned("p1-m1", expiry=10_000),
            assigned("p1-m2", wid="w8", expiry=12_000),
        ]
        state = build(protos)
        assert expired_leases(state, 9_999) == []
        assert expired_leases(state, 10_000) == [("p1", "p1-m1")]
        assert expired_leases(state, 50_000) == [("p1", "p1-m1"), ("p1", "p1-m2")]

    def test_queued_tasks_have_no_lease(self):
        protos = project_base() + [queued("p1-m1", "IdentifyBehavior", "p1-f1")]
        state = build(protos)
        assert expired_leases(state, 10**12) == []


class TestEligibilityUnit:
    def test_non_queued_tasks_are_never_eligible(self):
        protos = project_base() + [
            queued("p1-m1", "IdentifyBehavior", "p1-f1"),
            assigned("p1-m1"),
        ]
        state = build(protos)
        project = state.projects["p1"]
        assert not eligible(project, project.microtasks["p1-m1"], "w1", CFG)
