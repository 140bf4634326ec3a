"""Deterministic simulated crowd driving the service over its wire API.

The harness spawns the service in-process with a manual clock, but every
worker action travels through real HTTP, so a run doubles as a protocol
conformance check. A single seeded generator plus a virtual-time heap keyed
by (nextActionMillis, workerIndex) makes runs bit-reproducible: the same
scenario and seed always produce byte-identical event logs.
"""

from __future__ import annotations

import hashlib
import heapq
import random
import threading
from dataclasses import dataclass
from http.client import HTTPConnection
from pathlib import Path

from .api import make_server
from .clock import ManualClock
from .scenarios import Scenario, SimFunction, parse_scenario
from .service import Orchestrator, ServiceConfig
from .store import compare_logs
from .values import canonical_text, canonicalize, parse_value

__all__ = ["SimError", "SimReport", "run_scenario", "compare_runs"]

POLL_RETRY_MS = 2_000  # idle worker re-polls after this plus its own latency


class SimError(Exception):
    pass


# --- corruption model -----------------------------------------------------------
#
# Tests and implementations perturb the first scalar leaf differently, so a
# corrupted test can never agree with a corrupted implementation (or with
# any honest artifact): numbers go +1 vs -1, strings append "x" vs "#",
# booleans flip vs turn into a string, leafless values gain distinct keys.


def _perturb(value, style: str):
    if isinstance(value, bool):
        return (not value, True) if style == "test" else ("corrupted", True)
    if isinstance(value, (int, float)):
        return (value + 1, True) if style == "test" else (value - 1, True)
    if isinstance(value, str):
        return (value + ("x" if style == "test" else "#"), True)
    if isinstance(value, list):
        out = list(value)
        for i, item in enumerate(out):
            new, found = _perturb(item, style)
            if found:
                out[i] = new
                return out, True
        return out, False
    if isinstance(value, dict):
        out = dict(value)
        for key in sorted(out):
            new, found = _perturb(out[key], style)
            if found:
                out[key] = new
                return out, True
        return out, False
    return value, False


def corrupt_expected(value):
    new, found = _perturb(value, "test")
    return new if found else {"unexpected": True}


def corrupt_output(value):
    new, found = _perturb(value, "impl")
    return new if found else {"corrupted": True}


# --- wire plumbing ---------------------------------------------------------------


class WireClient:
    def __init__(self, host: str, port: int):
        self.conn = HTTPConnection(host, port, timeout=30)

    def request(self, method: str, path: str, token: str | None = None, body=None):
        headers = {}
        if token is not None:
            headers["Authorization"] = f"Bearer {token}"
        payload = None
        if body is not None:
            payload = canonicalize(body)
            headers["Content-Type"] = "application/json"
        try:
            self.conn.request(method, path, body=payload, headers=headers)
            response = self.conn.getresponse()
            raw = response.read()
        except OSError as exc:
            raise SimError(f"ServiceUnreachable: {exc}") from None
        return response.status, parse_value(raw) if raw else None

    def close(self) -> None:
        self.conn.close()


# --- worker policy ---------------------------------------------------------------


def _oracle_behavior(fn: SimFunction, statement: str) -> dict | None:
    for b in fn.behaviors:
        if b["statement"] == statement:
            return b
    return None


def _probe_test(fn: SimFunction) -> list[dict]:
    """Test an honest worker writes for a statement outside the contract: a
    claim the true table refutes, so the suite flags it for debugging."""
    args = ["__probe__"] * len(fn.params)
    return [{"args": args, "expected": {"bogusBehaviorProbe": True}}]


def _table_output(fn: SimFunction, args: list):
    key = canonical_text(args)
    entries = fn.implementation["entries"]
    return entries[key] if key in entries else fn.implementation["default"]


def _corrupted_table(fn: SimFunction, view: dict) -> dict:
    """Oracle table with the first active assertion's row made wrong."""
    active = view.get("activeTests") or []
    if active and active[0]["assertions"]:
        args = active[0]["assertions"][0]["args"]
    else:
        args = fn.behaviors[0]["assertions"][0]["args"]
    table = dict(fn.implementation)
    entries = dict(table["entries"])
    key = canonical_text(args)
    entries[key] = corrupt_output(entries.get(key, table["default"]))
    table["entries"] = entries
    return table


def honest_body(view: dict, scenario: Scenario) -> dict:
    kind = view["kind"]
    fn = scenario.functions[view["function"]["name"]]
    if kind == "IdentifyBehavior":
        declared = {b["statement"] for b in view["behaviors"]}
        for b in fn.behaviors:
            if b["statement"] not in declared:
                return {"kind": kind, "newStatement": b["statement"]}
        return {"kind": kind, "noMoreBehaviors": True}
    if kind == "WriteTest":
        oracle = _oracle_behavior(fn, view["behavior"]["statement"])
        if oracle is None:
            return {"kind": kind, "assertions": _probe_test(fn)}
        return {"kind": kind, "assertions": oracle["assertions"]}
    if kind == "ImplementBehavior":
        return {"kind": kind, "implementation": fn.implementation}
    if kind == "DebugFailure":
        statements = {row["behaviorId"]: row["statement"] for row in view["activeTests"]}
        for entry in view["failureReport"]["entries"]:
            stmt = statements.get(entry["behaviorId"])
            if stmt is not None and _oracle_behavior(fn, stmt) is None:
                return {
                    "kind": kind,
                    "outcome": "DisputeBehavior",
                    "behaviorId": entry["behaviorId"],
                    "reason": "the claimed behavior is not part of the contract",
                }
        for entry in view["failureReport"]["entries"]:
            if entry["expected"] != _table_output(fn, entry["args"]):
                return {
                    "kind": kind,
                    "outcome": "DisputeTest",
                    "behaviorId": entry["behaviorId"],
                    "reason": "recorded expectation disagrees with the agreed behavior",
                }
        return {
            "kind": kind,
            "outcome": "FixedImplementation",
            "implementation": fn.implementation,
            "reason": "restored a table satisfying every active expectation",
        }
    if kind == "ResolveConflict":
        edited = {}
        for side in view["sides"]:
            oracle = _oracle_behavior(fn, side["statement"])
            truth = _probe_test(fn) if oracle is None else oracle["assertions"]
            if side["assertions"] != truth:
                edited[side["behaviorId"]] = truth
        return {"kind": kind, "editedTests": edited}
    raise SimError(f"unknown microtask kind {kind!r}")


def corrupted_body(body: dict, view: dict, scenario: Scenario) -> dict:
    """Corrupt an honest submission: claim a behavior outside the contract,
    record a wrong expectation, or perturb a table row."""
    fn = scenario.functions[view["function"]["name"]]
    if body["kind"] == "IdentifyBehavior":
        # may duplicate an earlier bogus claim; the rejection is part of the noise
        bogus = body.get("newStatement", fn.behaviors[0]["statement"]) + " twice"
        return {"kind": body["kind"], "newStatement": bogus}
    if body["kind"] == "WriteTest":
        assertions = [dict(a) for a in body["assertions"]]
        assertions[0] = dict(assertions[0], expected=corrupt_expected(assertions[0]["expected"]))
        return dict(body, assertions=assertions)
    return dict(body, implementation=_corrupted_table(fn, view))


def _corruptible(body: dict) -> bool:
    if body["kind"] in ("IdentifyBehavior", "WriteTest", "ImplementBehavior"):
        return True
    return body["kind"] == "DebugFailure" and body["outcome"] == "FixedImplementation"


# --- the run ----------------------------------------------------------------------


@dataclass
class SimReport:
    scenario_name: str
    seed: int
    outcome: str  # Completed | NonConvergent | StepLimit
    project_id: str
    total_microtasks: int
    counts_by_kind: dict
    conflicts_opened: int
    conflicts_resolved: int
    debug_tasks: int
    wall_steps: int
    metrics: dict
    event_log_path: str
    bundle: dict | None
    final_state_sha256: str

    def to_value(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "seed": self.seed,
            "outcome": self.outcome,
            "projectId": self.project_id,
            "totalMicrotasks": self.total_microtasks,
            "countsByKind": self.counts_by_kind,
            "conflictsOpened": self.conflicts_opened,
            "conflictsResolved": self.conflicts_resolved,
            "debugTasks": self.debug_tasks,
            "wallSteps": self.wall_steps,
            "metricsFromService": self.metrics,
            "eventLogPath": self.event_log_path,
            "finalStateSha256": self.final_state_sha256,
        }


class _Worker:
    __slots__ = (
        "index", "worker_id", "token", "model", "client", "assignment",
        "timing_rng", "quality_rng",
    )

    def __init__(self, index, worker_id, token, model, client, run_seed):
        self.index = index
        self.worker_id = worker_id
        self.token = token
        self.model = model
        self.client = client
        self.assignment = None
        # Split streams: latency draws never perturb skip/accuracy decisions,
        # so work quality for a given seed survives scheduling tweaks.
        self.timing_rng = random.Random(f"{run_seed}/{index}/timing")
        self.quality_rng = random.Random(f"{run_seed}/{index}/quality")


def run_scenario(scenario, *, seed: int | None = None, log_path: str | None = None) -> SimReport:
    if not isinstance(scenario, Scenario):
        scenario = parse_scenario(scenario)
    seed = scenario.seed if seed is None else seed
    if log_path is None:
        raise SimError("run_scenario needs a log_path for the event log")
    Path(log_path).parent.mkdir(parents=True, exist_ok=True)

    config = ServiceConfig(
        listen_address="127.0.0.1:0",
        log_path=str(log_path),
        clock_mode="manual",
    )
    orch = Orchestrator(config, clock=ManualClock(start_millis=1_000_000))
    server = make_server(orch)
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.05), daemon=True
    )
    thread.start()
    host, port = server.server_address[0], server.server_address[1]

    workers: list[_Worker] = []
    try:
        control = WireClient(host, port)
        status, created = control.request("POST", "/projects", body=scenario.project_spec)
        if status != 201:
            raise SimError(f"project creation failed: {status} {created}")
        project_id = created["projectId"]

        for model in scenario.worker_models:
            for _ in range(model.count):
                client = WireClient(host, port)
                status, doc = client.request(
                    "POST", "/workers", body={"handle": f"sim-{len(workers) + 1}"}
                )
                if status != 201:
                    raise SimError(f"worker registration failed: {status} {doc}")
                workers.append(
                    _Worker(len(workers), doc["workerId"], doc["token"], model, client, seed)
                )

        def latency(worker: _Worker) -> int:
            return worker.timing_rng.randint(
                worker.model.latency_min_ms, worker.model.latency_max_ms
            )

        now = 1_000_000
        heap: list[tuple[int, int]] = []
        for worker in workers:
            heapq.heappush(heap, (now + latency(worker), worker.index))

        steps = 0
        outcome = "StepLimit"
        while steps < scenario.max_steps:
            when, index = heapq.heappop(heap)
            worker = workers[index]
            now = max(now, when)
            orch.set_clock(now)  # manual-clock injection point; not a wire route
            steps += 1

            if worker.assignment is None:
                status, doc = worker.client.request(
                    "POST", f"/workers/{worker.worker_id}/fetch", token=worker.token
                )
                if status != 200:
                    raise SimError(f"fetch failed for {worker.worker_id}: {status} {doc}")
                if doc.get("noWork"):
                    heapq.heappush(heap, (now + POLL_RETRY_MS + latency(worker), index))
                else:
                    worker.assignment = doc["microtask"]
                    heapq.heappush(heap, (now + latency(worker), index))
            else:
                view = worker.assignment
                mid = view["microtaskId"]
                quality = worker.quality_rng
                if worker.model.skip_p > 0 and quality.random() < worker.model.skip_p:
                    worker.client.request(
                        "POST", f"/microtasks/{mid}/skip", token=worker.token
                    )
                else:
                    body = honest_body(view, scenario)
                    if _corruptible(body) and quality.random() >= worker.model.accuracy_p:
                        body = corrupted_body(body, view, scenario)
                    status, doc = worker.client.request(
                        "POST", f"/microtasks/{mid}/submit", token=worker.token, body=body
                    )
                    if status not in (200, 409):
                        raise SimError(f"submit failed on {mid}: {status} {doc}")
                worker.assignment = None
                heapq.heappush(heap, (now + latency(worker), index))

            project = orch.state.projects[project_id]
            if project.completed:
                outcome = "Completed"
                break
            if (
                all(w.assignment is None for w in workers)
                and not any(t.open for t in project.microtasks.values())
            ):
                outcome = "NonConvergent"
                break

        status, metrics = control.request("GET", f"/metrics/{project_id}")
        if status != 200:
            raise SimError(f"metrics fetch failed: {status} {metrics}")
        bundle = None
        if outcome == "Completed":
            status, bundle = control.request("GET", f"/projects/{project_id}/bundle")
            if status != 200:
                raise SimError(f"bundle fetch failed: {status} {bundle}")
        debug_tasks = sum(
            1
            for event in orch.store.events
            if event.kind == "MicrotaskQueued"
            and event.payload.get("projectId") == project_id
            and event.payload["kind"] == "DebugFailure"
        )
        # captured from the live fold; a replay of the log must reproduce it
        state_digest = hashlib.sha256(orch.state.canonical_bytes()).hexdigest()
        return SimReport(
            scenario_name=scenario.name,
            seed=seed,
            outcome=outcome,
            project_id=project_id,
            total_microtasks=metrics["microtasksCompleted"],
            counts_by_kind=metrics["countsByKind"],
            conflicts_opened=metrics["conflicts"]["opened"],
            conflicts_resolved=metrics["conflicts"]["resolved"],
            debug_tasks=debug_tasks,
            wall_steps=steps,
            metrics=metrics,
            event_log_path=str(log_path),
            bundle=bundle,
            final_state_sha256=state_digest,
        )
    finally:
        for worker in workers:
            worker.client.close()
        server.shutdown()
        thread.join(timeout=5)


def compare_runs(log_a: str, log_b: str) -> dict:
    """Bytewise line comparison of two event logs."""
    return compare_logs(log_a, log_b)
