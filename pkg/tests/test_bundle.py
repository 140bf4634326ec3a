"""Deterministic bundle assembly and table-kind local serving."""

import pytest

from microcrowd.bundle import build_bundle, content_hash, serve_local, verify_bundle
from microcrowd.errors import BadRequest, DomainError, NotFound
from microcrowd.values import canonicalize


def complete_double(orch, wid):
    """Drive the one-endpoint doubler project to ProjectCompleted."""
    orch.create_project(
        {
            "name": "doubler",
            "endpoints": [
                {
                    "method": "POST",
                    "path": "/double",
                    "name": "doubleNumber",
                    "description": "Doubles the supplied number.",
                    "requestSchema": [["n", "number"]],
                    "responseSchema": [["result", "number"]],
                }
            ],
        }
    )
    steps = [
        {"kind": "IdentifyBehavior", "newStatement": "doubles a positive number"},
        {"kind": "WriteTest", "assertions": [{"args": [2], "expected": {"result": 4}}]},
        {
            "kind": "ImplementBehavior",
            "implementation": {
                "kind": "Table",
                "entries": {"[2]": {"result": 4}},
                "default": {"result": 0},
                "declaredPseudoCalls": [],
            },
        },
        {"kind": "IdentifyBehavior", "noMoreBehaviors": True},
    ]
    for body in steps:
        task = orch.fetch(wid)["microtask"]
        out = orch.submit(wid, task["microtaskId"], body)
        assert out["status"] == "accepted"
    assert orch.project_status("p1")["completed"] is True


@pytest.fixture
def completed(make_orch):
    orch = make_orch()
    wid = orch.register_worker()["workerId"]
    complete_double(orch, wid)
    return orch


class TestBuild:
    def test_incomplete_project_refused(self, make_orch, double_spec):
        orch = make_orch()
        orch.create_project(double_spec)
        with pytest.raises(DomainError) as err:
            build_bundle(orch.store.events, "p1")
        assert err.value.code == "NotComplete"

    def test_manifest_and_sections(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        assert list(doc) == [
            "manifest",
            "serviceDescriptor",
            "functions",
            "suites",
            "metricsSnapshot",
        ]
        manifest = doc["manifest"]
        assert manifest["projectId"] == "p1"
        assert manifest["createdFromSeq"] == completed.store.last_seq
        assert verify_bundle(doc) == manifest["contentHash"]
        assert len(doc["serviceDescriptor"]) == 1
        entry = doc["serviceDescriptor"][0]
        assert entry["functionName"] == "doubleNumber"
        assert entry["requestSchema"] == [["n", "number"]]
        impl = doc["functions"]["doubleNumber"]["implementation"]
        assert impl["kind"] == "Table"
        assert doc["suites"]["doubleNumber"][0]["assertions"] == [
            {"args": [2], "expected": {"result": 4}}
        ]
        assert doc["metricsSnapshot"]["projectCompleted"] is True

    def test_double_build_is_byte_identical(self, completed):
        first = build_bundle(completed.store.events, "p1")
        second = build_bundle(completed.store.events, "p1")
        assert canonicalize(first) == canonicalize(second)

    def test_later_log_growth_does_not_change_the_bundle(self, completed):
        before = canonicalize(build_bundle(completed.store.events, "p1"))
        completed.create_project(
            {"name": "second", "endpoints": [dict(
                method="POST", path="/other", name="otherFn",
                description="", requestSchema=[], responseSchema=[],
            )]}
        )
        after = canonicalize(build_bundle(completed.store.events, "p1"))
        assert before == after

    def test_retired_behaviors_are_not_shipped(self, make_orch):
        # completing after a dispute leaves the retired behavior out of the suite
        orch = make_orch()
        wid = orch.register_worker()["workerId"]
        complete_double(orch, wid)
        doc = build_bundle(orch.store.events, "p1")
        shipped = [case["behaviorId"] for case in doc["suites"]["doubleNumber"]]
        assert shipped == ["p1-b1"]


class TestVerify:
    def test_tampered_document_fails(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        doc["suites"]["doubleNumber"][0]["assertions"][0]["expected"] = {"result": 5}
        with pytest.raises(DomainError) as err:
            verify_bundle(doc)
        assert err.value.code == "HashMismatch"

    def test_tampered_manifest_field_fails(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        doc["manifest"]["createdFromSeq"] += 1
        with pytest.raises(DomainError):
            verify_bundle(doc)

    def test_non_bundle_value_fails(self):
        with pytest.raises(BadRequest) as err:
            verify_bundle({"nope": 1})
        assert err.value.code == "NotABundle"


class TestServeLocal:
    def test_routes_and_evaluates(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        assert serve_local(doc, "POST", "/double", [2]) == {"result": 4}
        assert serve_local(doc, "POST", "/double", [99]) == {"result": 0}  # default row

    def test_unknown_endpoint(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        with pytest.raises(NotFound) as err:
            serve_local(doc, "GET", "/nowhere", [])
        assert err.value.code == "UnknownEndpoint"

    def test_tampered_bundle_refused_before_evaluation(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        doc["functions"]["doubleNumber"]["implementation"]["entries"]["[2]"] = {"result": 9}
        with pytest.raises(DomainError) as err:
            serve_local(doc, "POST", "/double", [2])
        assert err.value.code == "HashMismatch"

    def test_non_table_functions_refused(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        doc["functions"]["doubleNumber"]["implementation"]["kind"] = "Source"
        doc["manifest"]["contentHash"] = ""
        doc["manifest"]["contentHash"] = content_hash(doc)
        with pytest.raises(DomainError) as err:
            serve_local(doc, "POST", "/double", [2])
        assert err.value.code == "UnsupportedKind"

    def test_shipped_suites_pass_against_shipped_tables(self, completed):
        doc = build_bundle(completed.store.events, "p1")
        route_of = {
            entry["functionName"]: (entry["method"], entry["path"])
            for entry in doc["serviceDescriptor"]
        }
        for name, cases in doc["suites"].items():
            if name not in route_of:
                continue  # helper functions have no endpoint
            method, path = route_of[name]
            for case in cases:
                for assertion in case["assertions"]:
                    got = serve_local(doc, method, path, assertion["args"])
                    assert got == assertion["expected"]
