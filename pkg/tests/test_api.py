"""Wire-level behavior: routes, auth roles, status codes, canonical bodies."""

import json
import threading

import httpx
import pytest

from microcrowd.api import make_server
from microcrowd.bundle import verify_bundle
from microcrowd.clock import ManualClock
from microcrowd.scheduler import SchedulerConfig
from microcrowd.service import Orchestrator, ServiceConfig
from microcrowd.values import canonicalize

CLIENT = {"Authorization": "Bearer ctok"}
ENROLL = {"Authorization": "Bearer rtok"}


@pytest.fixture
def api(tmp_path):
    config = ServiceConfig(
        listen_address="127.0.0.1:0",
        client_tokens=["ctok"],
        worker_tokens=["rtok"],
        log_path=str(tmp_path / "api.log"),
        clock_mode="manual",
        scheduler=SchedulerConfig(),
    )
    orch = Orchestrator(config, clock=ManualClock(start_millis=1_000_000))
    server = make_server(orch)
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.02), daemon=True
    )
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    with httpx.Client(base_url=base, timeout=10.0) as client:
        yield client, orch
    server.shutdown()
    thread.join(timeout=5)


DOUBLE_PROJECT = {
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


def enroll_worker(client):
    r = client.post("/workers", headers=ENROLL, json={})
    assert r.status_code == 201
    doc = r.json()
    return doc["workerId"], {"Authorization": f"Bearer {doc['token']}"}


def fetch(client, wid, auth):
    r = client.post(f"/workers/{wid}/fetch", headers=auth)
    assert r.status_code == 200
    return r.json()


class TestAuth:
    def test_client_routes_reject_missing_or_wrong_tokens(self, api):
        client, _ = api
        assert client.post("/projects", json=DOUBLE_PROJECT).status_code == 401
        bad = {"Authorization": "Bearer nope"}
        assert client.post("/projects", headers=bad, json=DOUBLE_PROJECT).status_code == 401
        # role tokens do not cross over
        assert client.post("/projects", headers=ENROLL, json=DOUBLE_PROJECT).status_code == 401

    def test_registration_requires_the_enroll_token(self, api):
        client, _ = api
        assert client.post("/workers", json={}).status_code == 401
        assert client.post("/workers", headers=CLIENT, json={}).status_code == 401

    def test_worker_routes_require_the_issued_token(self, api):
        client, _ = api
        wid, auth = enroll_worker(client)
        r = client.post(f"/workers/{wid}/fetch", headers=ENROLL)
        assert r.status_code == 401
        other_wid, other_auth = enroll_worker(client)
        r = client.post(f"/workers/{wid}/fetch", headers=other_auth)
        assert r.status_code == 401  # token belongs to a different worker

    def test_error_bodies_carry_machine_codes(self, api):
        client, _ = api
        r = client.post("/projects", json=DOUBLE_PROJECT)
        assert r.json()["error"] == "Unauthorized"


class TestClientRoutes:
    def test_create_project_201_with_id(self, api):
        client, _ = api
        r = client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        assert r.status_code == 201
        assert r.json()["projectId"] == "p1"

    def test_create_rejects_malformed_json(self, api):
        client, _ = api
        r = client.post(
            "/projects", headers={**CLIENT, "Content-Type": "application/json"},
            content=b"{not json",
        )
        assert r.status_code == 400

    def test_domain_errors_are_409(self, api):
        client, _ = api
        r = client.post("/projects", headers=CLIENT, json={"name": "x", "endpoints": []})
        assert r.status_code == 409
        assert r.json()["error"] == "EmptyProject"

    def test_status_includes_metrics_and_flags(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        r = client.get("/projects/p1/status", headers=CLIENT)
        assert r.status_code == 200
        doc = r.json()
        assert doc["queueDepths"]["IdentifyBehavior"] == 1
        assert doc["metrics"]["microtasksCompleted"] == 0
        assert doc["flags"] == {"stuck": [], "attention": []}

    def test_unknown_project_404(self, api):
        client, _ = api
        r = client.get("/projects/p9/status", headers=CLIENT)
        assert r.status_code == 404
        assert r.json()["error"] == "UnknownProject"
        assert client.get("/metrics/p9", headers=CLIENT).status_code == 404

    def test_unknown_route_404(self, api):
        client, _ = api
        r = client.get("/frobnicate", headers=CLIENT)
        assert r.status_code == 404
        assert r.json()["error"] == "UnknownRoute"

    def test_responses_are_canonical_bytes(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        r = client.get("/projects/p1/status", headers=CLIENT)
        assert r.content == canonicalize(json.loads(r.content))


class TestWorkerRoutes:
    def test_empty_queue_reports_no_work(self, api):
        client, _ = api
        wid, auth = enroll_worker(client)
        assert fetch(client, wid, auth) == {"noWork": True}

    def test_fetch_submit_roundtrip(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        wid, auth = enroll_worker(client)
        doc = fetch(client, wid, auth)
        assert doc["noWork"] is False
        task = doc["microtask"]
        assert task["kind"] == "IdentifyBehavior"
        r = client.post(
            f"/microtasks/{task['microtaskId']}/submit",
            headers=auth,
            json={"kind": "IdentifyBehavior", "newStatement": "doubles a number"},
        )
        assert r.status_code == 200
        assert r.json()["status"] == "accepted"

    def test_rejection_is_a_200_with_status_rejected(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        wid, auth = enroll_worker(client)
        task = fetch(client, wid, auth)["microtask"]
        r = client.post(
            f"/microtasks/{task['microtaskId']}/submit",
            headers=auth,
            json={"kind": "IdentifyBehavior", "newStatement": "   "},
        )
        assert r.status_code == 200
        doc = r.json()
        assert doc["status"] == "rejected"
        assert doc["code"] == "EmptyStatement"

    def test_non_assignee_submit_is_409(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        w1, auth1 = enroll_worker(client)
        w2, auth2 = enroll_worker(client)
        task = fetch(client, w1, auth1)["microtask"]
        r = client.post(
            f"/microtasks/{task['microtaskId']}/submit",
            headers=auth2,
            json={"kind": "IdentifyBehavior", "newStatement": "x"},
        )
        assert r.status_code == 409
        assert r.json()["error"] == "NotAssignee"

    def test_resubmitting_a_completed_microtask_is_stale_and_harmless(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        wid, auth = enroll_worker(client)
        task = fetch(client, wid, auth)["microtask"]
        body = {"kind": "IdentifyBehavior", "newStatement": "doubles a number"}
        client.post(f"/microtasks/{task['microtaskId']}/submit", headers=auth, json=body)
        before = client.get("/projects/p1/status", headers=CLIENT).content
        r = client.post(f"/microtasks/{task['microtaskId']}/submit", headers=auth, json=body)
        assert r.status_code == 409
        assert r.json()["error"] == "StaleMicrotask"
        assert client.get("/projects/p1/status", headers=CLIENT).content == before

    def test_skip_roundtrip(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        wid, auth = enroll_worker(client)
        task = fetch(client, wid, auth)["microtask"]
        r = client.post(f"/microtasks/{task['microtaskId']}/skip", headers=auth)
        assert r.status_code == 200
        assert r.json()["status"] == "skipped"
        assert fetch(client, wid, auth)["microtask"]["microtaskId"] == task["microtaskId"]

    def test_unknown_microtask_404(self, api):
        client, _ = api
        wid, auth = enroll_worker(client)
        r = client.post("/microtasks/p1-m99/submit", headers=auth, json={"kind": "WriteTest"})
        assert r.status_code == 404


class TestBundleRoute:
    def drive_to_completion(self, client, auth, wid):
        bodies = [
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
        for body in bodies:
            task = fetch(client, wid, auth)["microtask"]
            r = client.post(f"/microtasks/{task['microtaskId']}/submit", headers=auth, json=body)
            assert r.json()["status"] == "accepted"

    def test_bundle_before_completion_is_409(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        r = client.get("/projects/p1/bundle", headers=CLIENT)
        assert r.status_code == 409
        assert r.json()["error"] == "NotComplete"

    def test_bundle_after_completion_verifies_and_is_stable(self, api):
        client, _ = api
        client.post("/projects", headers=CLIENT, json=DOUBLE_PROJECT)
        wid, auth = enroll_worker(client)
        self.drive_to_completion(client, auth, wid)
        first = client.get("/projects/p1/bundle", headers=CLIENT)
        assert first.status_code == 200
        verify_bundle(json.loads(first.content))
        second = client.get("/projects/p1/bundle", headers=CLIENT)
        assert second.content == first.content


class TestCors:
    def test_preflight(self, api):
        client, _ = api
        r = client.options("/projects")
        assert r.status_code == 204
        assert r.headers["Access-Control-Allow-Origin"] == "*"
        assert "Authorization" in r.headers["Access-Control-Allow-Headers"]

    def test_regular_responses_carry_cors_headers(self, api):
        client, _ = api
        r = client.get("/projects/p9/status", headers=CLIENT)
        assert r.headers["Access-Control-Allow-Origin"] == "*"
