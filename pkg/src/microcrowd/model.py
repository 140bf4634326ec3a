"""Wire-facing domain types: endpoints, assertions, implementations, bodies.

Structural validation happens here (malformed shapes raise BadRequest);
content-level rules (arity, duplicates, emptiness) belong to the engine,
which turns them into submission rejections instead of 4xx responses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BadRequest
from .values import SCALAR_TYPES, MalformedValue, Value, canonical_text, ensure_value, parse_value

__all__ = [
    "MICROTASK_KINDS",
    "PRIORITY_BY_KIND",
    "HTTP_METHODS",
    "EndpointDescription",
    "Assertion",
    "PseudoCallDecl",
    "Implementation",
    "IdentifyBody",
    "TestBody",
    "ImplementBody",
    "DebugBody",
    "ResolveBody",
    "parse_endpoint",
    "parse_project_spec",
    "parse_assertions",
    "parse_implementation",
    "parse_submission_body",
    "ordinal_of",
]

HTTP_METHODS = ("GET", "POST", "PUT", "DELETE")

# Priority classes, highest first; FIFO by enqueue seq within a class.
MICROTASK_KINDS = (
    "IdentifyBehavior",
    "WriteTest",
    "ImplementBehavior",
    "DebugFailure",
    "ResolveConflict",
)
PRIORITY_BY_KIND = {
    "DebugFailure": 0,
    "ResolveConflict": 1,
    "ImplementBehavior": 2,
    "WriteTest": 3,
    "IdentifyBehavior": 4,
}

# Kinds whose in-flight presence claims the function's single writer slot.
WRITER_KINDS = frozenset({"ImplementBehavior", "DebugFailure"})

Schema = list  # list of [fieldName, scalarType] pairs, order significant


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise BadRequest(message)


def _schema(raw: Value, where: str) -> Schema:
    _require(isinstance(raw, list), f"{where}: schema must be a list")
    out = []
    for i, pair in enumerate(raw):
        _require(
            isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair),
            f"{where}[{i}]: each schema entry is a [fieldName, scalarType] pair",
        )
        out.append([pair[0], pair[1]])
    return out


@dataclass(slots=True)
class EndpointDescription:
    method: str
    path: str
    name: str
    description: str
    request_schema: Schema
    response_schema: Schema

    def to_value(self) -> dict:
        return {
            "method": self.method,
            "path": self.path,
            "name": self.name,
            "description": self.description,
            "requestSchema": self.request_schema,
            "responseSchema": self.response_schema,
        }


def parse_endpoint(raw: Value, where: str = "endpoint") -> EndpointDescription:
    _require(isinstance(raw, dict), f"{where}: must be an object")
    for key in ("method", "path", "name", "description"):
        _require(isinstance(raw.get(key), str), f"{where}.{key}: must be a string")
    return EndpointDescription(
        method=raw["method"],
        path=raw["path"],
        name=raw["name"],
        description=raw["description"],
        request_schema=_schema(raw.get("requestSchema", []), f"{where}.requestSchema"),
        response_schema=_schema(raw.get("responseSchema", []), f"{where}.responseSchema"),
    )


def parse_project_spec(raw: Value) -> tuple[str, list[EndpointDescription]]:
    _require(isinstance(raw, dict), "project spec must be an object")
    name = raw.get("name", "")
    _require(isinstance(name, str), "project name must be a string")
    endpoints_raw = raw.get("endpoints")
    _require(isinstance(endpoints_raw, list), "endpoints must be a list")
    endpoints = [parse_endpoint(e, f"endpoints[{i}]") for i, e in enumerate(endpoints_raw)]
    return name, endpoints


@dataclass(slots=True)
class Assertion:
    args: list
    expected: Value

    def to_value(self) -> dict:
        return {"args": self.args, "expected": self.expected}

    def args_key(self) -> str:
        return canonical_text(self.args)


def parse_assertions(raw: Value, where: str = "assertions") -> list[Assertion]:
    _require(isinstance(raw, list), f"{where}: must be a list")
    out = []
    for i, entry in enumerate(raw):
        _require(isinstance(entry, dict), f"{where}[{i}]: must be an object")
        _require(isinstance(entry.get("args"), list), f"{where}[{i}].args: must be a list")
        _require("expected" in entry, f"{where}[{i}].expected: missing")
        try:
            ensure_value(entry["args"])
            ensure_value(entry["expected"])
        except MalformedValue as exc:
            raise BadRequest(f"{where}[{i}]: {exc}") from None
        out.append(Assertion(args=entry["args"], expected=entry["expected"]))
    return out


@dataclass(slots=True)
class PseudoCallDecl:
    name: str
    params: Schema
    return_type: str
    description: str

    def to_value(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "returnType": self.return_type,
            "description": self.description,
        }

    def signature(self) -> str:
        return canonical_text({"params": self.params, "returnType": self.return_type})


@dataclass(slots=True)
class Implementation:
    kind: str  # "Table" | "Source"
    entries: dict = field(default_factory=dict)  # canonical args text -> Value
    default: Value = None
    source: str = ""
    language_tag: str = ""
    declared_pseudo_calls: list[PseudoCallDecl] = field(default_factory=list)

    def to_value(self) -> dict:
        doc: dict = {
            "kind": self.kind,
            "declaredPseudoCalls": [d.to_value() for d in self.declared_pseudo_calls],
        }
        if self.kind == "Table":
            doc["entries"] = dict(self.entries)
            doc["default"] = self.default
        else:
            doc["source"] = self.source
            doc["languageTag"] = self.language_tag
        return doc

    def lookup(self, args: list) -> Value:
        """Table lookup by canonical args; falls back to the default value."""
        return self.entries.get(canonical_text(args), self.default)


def parse_pseudo_call(raw: Value, where: str) -> PseudoCallDecl:
    _require(isinstance(raw, dict), f"{where}: must be an object")
    _require(isinstance(raw.get("name"), str), f"{where}.name: must be a string")
    _require(isinstance(raw.get("description", ""), str), f"{where}.description: must be a string")
    _require(isinstance(raw.get("returnType"), str), f"{where}.returnType: must be a string")
    return PseudoCallDecl(
        name=raw["name"],
        params=_schema(raw.get("params", []), f"{where}.params"),
        return_type=raw["returnType"],
        description=raw.get("description", ""),
    )


def parse_implementation(raw: Value, where: str = "implementation") -> Implementation:
    _require(isinstance(raw, dict), f"{where}: must be an object")
    kind = raw.get("kind")
    _require(kind in ("Table", "Source"), f"{where}.kind: must be Table or Source")
    declared = [
        parse_pseudo_call(d, f"{where}.declaredPseudoCalls[{i}]")
        for i, d in enumerate(raw.get("declaredPseudoCalls", []) or [])
    ]
    if kind == "Table":
        entries_raw = raw.get("entries")
        _require(isinstance(entries_raw, dict), f"{where}.entries: must be an object")
        _require("default" in raw, f"{where}.default: missing")
        entries: dict[str, Value] = {}
        for key, value in entries_raw.items():
            try:
                args = parse_value(key)
            except MalformedValue:
                raise BadRequest(f"{where}.entries: key {key!r} is not canonical JSON") from None
            _require(isinstance(args, list), f"{where}.entries: key {key!r} must encode an args list")
            _require(
                canonical_text(args) == key,
                f"{where}.entries: key {key!r} is not in canonical form",
            )
            try:
                ensure_value(value)
            except MalformedValue as exc:
                raise BadRequest(f"{where}.entries[{key!r}]: {exc}") from None
            entries[key] = value
        try:
            ensure_value(raw["default"])
        except MalformedValue as exc:
            raise BadRequest(f"{where}.default: {exc}") from None
        return Implementation(
            kind="Table", entries=entries, default=raw["default"], declared_pseudo_calls=declared
        )
    _require(isinstance(raw.get("source"), str) and raw["source"] != "", f"{where}.source: required")
    _require(
        isinstance(raw.get("languageTag"), str) and raw["languageTag"] != "",
        f"{where}.languageTag: required",
    )
    return Implementation(
        kind="Source",
        source=raw["source"],
        language_tag=raw["languageTag"],
        declared_pseudo_calls=declared,
    )


# --- submission bodies ------------------------------------------------------


@dataclass(slots=True)
class IdentifyBody:
    kind = "IdentifyBehavior"
    new_statement: str | None
    no_more: bool


@dataclass(slots=True)
class TestBody:
    kind = "WriteTest"
    assertions: list[Assertion]


@dataclass(slots=True)
class ImplementBody:
    kind = "ImplementBehavior"
    implementation: Implementation


@dataclass(slots=True)
class DebugBody:
    kind = "DebugFailure"
    outcome: str  # FixedImplementation | DisputeTest | DisputeBehavior
    implementation: Implementation | None
    behavior_id: str | None
    reason: str


@dataclass(slots=True)
class ResolveBody:
    kind = "ResolveConflict"
    edited_statements: dict  # behaviorId -> new statement text
    edited_tests: dict  # behaviorId -> list[Assertion]


SubmissionBody = IdentifyBody | TestBody | ImplementBody | DebugBody | ResolveBody


def parse_submission_body(raw: Value) -> SubmissionBody:
    _require(isinstance(raw, dict), "body must be an object")
    kind = raw.get("kind")
    _require(kind in MICROTASK_KINDS, f"body.kind: must be one of {', '.join(MICROTASK_KINDS)}")
    if kind == "IdentifyBehavior":
        no_more = raw.get("noMoreBehaviors", False)
        _require(isinstance(no_more, bool), "body.noMoreBehaviors: must be a boolean")
        statement = raw.get("newStatement")
        _require(
            statement is None or isinstance(statement, str),
            "body.newStatement: must be a string",
        )
        _require(
            no_more != (statement is not None),
            "body: exactly one of newStatement / noMoreBehaviors",
        )
        return IdentifyBody(new_statement=statement, no_more=no_more)
    if kind == "WriteTest":
        return TestBody(assertions=parse_assertions(raw.get("assertions"), "body.assertions"))
    if kind == "ImplementBehavior":
        return ImplementBody(implementation=parse_implementation(raw.get("implementation")))
    if kind == "DebugFailure":
        outcome = raw.get("outcome")
        _require(
            outcome in ("FixedImplementation", "DisputeTest", "DisputeBehavior"),
            "body.outcome: must be FixedImplementation, DisputeTest or DisputeBehavior",
        )
        reason = raw.get("reason", "")
        _require(isinstance(reason, str), "body.reason: must be a string")
        if outcome == "FixedImplementation":
            return DebugBody(
                outcome=outcome,
                implementation=parse_implementation(raw.get("implementation")),
                behavior_id=None,
                reason=reason,
            )
        _require(isinstance(raw.get("behaviorId"), str), "body.behaviorId: must be a string")
        return DebugBody(
            outcome=outcome, implementation=None, behavior_id=raw["behaviorId"], reason=reason
        )
    # ResolveConflict
    statements_raw = raw.get("editedStatements", {})
    tests_raw = raw.get("editedTests", {})
    _require(isinstance(statements_raw, dict), "body.editedStatements: must be an object")
    _require(isinstance(tests_raw, dict), "body.editedTests: must be an object")
    for bid, text in statements_raw.items():
        _require(isinstance(text, str), f"body.editedStatements[{bid!r}]: must be a string")
    edited_tests = {
        bid: parse_assertions(assertions, f"body.editedTests[{bid!r}]")
        for bid, assertions in tests_raw.items()
    }
    return ResolveBody(edited_statements=dict(statements_raw), edited_tests=edited_tests)


def ordinal_of(entity_id: str) -> int:
    """Trailing integer of an id like "p1-m12" or "p3" (used to bump counters)."""
    tail = entity_id.rsplit("-", 1)[-1]
    digits = tail.lstrip("pfbtmcw")
    return int(digits) if digits.isdigit() else 0
