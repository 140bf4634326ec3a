"""Deployable artifact assembly and table-kind local serving.

A bundle is a single canonical-JSON document computed from the event-log
prefix that ends at the project's completion event. Everything inside is a
pure function of that prefix, so building twice yields identical bytes.
"""

from __future__ import annotations

import hashlib

from .errors import BadRequest, DomainError, NotFound
from .events import Event
from .metrics import compute_metrics
from .state import fold
from .values import canonical_text, canonicalize

__all__ = ["build_bundle", "content_hash", "verify_bundle", "serve_local"]


def content_hash(doc: dict) -> str:
    """SHA-256 of the canonical bytes with the hash field itself blanked."""
    manifest = dict(doc["manifest"], contentHash="")
    unsigned = dict(doc, manifest=manifest)
    return hashlib.sha256(canonicalize(unsigned)).hexdigest()


def build_bundle(events: list[Event], project_id: str) -> dict:
    cut = None
    for event in events:
        if event.kind == "ProjectCompleted" and event.payload.get("projectId") == project_id:
            cut = event.seq
            break
    if cut is None:
        raise DomainError(
            f"project {project_id!r} has not completed; nothing to bundle",
            code="NotComplete",
        )
    prefix = [e for e in events if e.seq <= cut]
    state = fold(prefix)
    project = state.projects[project_id]

    by_ref = {fn.origin["ref"]: fn for fn in project.functions.values()
              if fn.origin["kind"] == "EndpointRoot"}
    descriptor = []
    for ep in project.endpoints:
        fn = by_ref[f"{ep['method']} {ep['path']}"]
        descriptor.append(
            {
                "method": ep["method"],
                "path": ep["path"],
                "functionName": fn.name,
                "description": ep.get("description", ""),
                "requestSchema": ep["requestSchema"],
                "responseSchema": ep["responseSchema"],
            }
        )

    functions = {}
    suites = {}
    for fn in project.functions.values():
        impl = project.implementations[fn.id]
        functions[fn.name] = {
            "params": fn.params,
            "returnType": fn.return_type,
            "origin": fn.origin,
            "implementation": impl.to_value(),
        }
        cases = []
        for bid in fn.behavior_ids:
            behavior = project.behaviors[bid]
            if behavior.state == "Retired":
                continue
            test = project.tests[behavior.test_id]
            cases.append(
                {
                    "behaviorId": bid,
                    "statement": behavior.statement,
                    "testVersion": test.version,
                    "assertions": test.assertions,
                }
            )
        suites[fn.name] = cases

    doc = {
        "manifest": {"projectId": project_id, "createdFromSeq": cut, "contentHash": ""},
        "serviceDescriptor": descriptor,
        "functions": functions,
        "suites": suites,
        "metricsSnapshot": compute_metrics(prefix, project_id),
    }
    doc["manifest"]["contentHash"] = content_hash(doc)
    return doc


def verify_bundle(doc: dict) -> str:
    """Returns the recomputed hash; raises if it disagrees with the manifest."""
    if not isinstance(doc, dict) or not isinstance(doc.get("manifest"), dict):
        raise BadRequest("not a bundle document", code="NotABundle")
    recomputed = content_hash(doc)
    if recomputed != doc["manifest"].get("contentHash"):
        raise DomainError(
            "bundle content hash does not verify", code="HashMismatch"
        )
    return recomputed


def _evaluate_table(impl: dict, args: list):
    if impl.get("kind") != "Table":
        raise DomainError(
            f"local serving handles Table functions only, not {impl.get('kind')!r}",
            code="UnsupportedKind",
        )
    key = canonical_text(args)
    entries = impl["entries"]
    return entries[key] if key in entries else impl["default"]


def serve_local(doc: dict, method: str, path: str, args: list):
    """Evaluate one request against a verified bundle; pure, no state."""
    verify_bundle(doc)
    for entry in doc["serviceDescriptor"]:
        if entry["method"] == method and entry["path"] == path:
            fn = doc["functions"][entry["functionName"]]
            return _evaluate_table(fn["implementation"], args)
    raise NotFound(f"no endpoint for {method} {path}", code="UnknownEndpoint")
