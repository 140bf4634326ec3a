"""Append-only event model.

An event line on disk is `<canonical JSON>#<crc32 hex>`. The JSON object has
exactly the fields seq, commit, timestamp, kind, payload. `commit` is the seq
of the final event in the same commit, which is what lets recovery truncate a
half-written commit back to a commit boundary.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

from .errors import CorruptLog
from .values import Value, canonicalize, parse_value

EVENT_KINDS = (
    "ProjectCreated",
    "FunctionSpecAdded",
    "MicrotaskQueued",
    "MicrotaskAssigned",
    "MicrotaskSkipped",
    "MicrotaskTimedOut",
    "SubmissionApplied",
    "BehaviorAdded",
    "TestStored",
    "ImplementationStored",
    "SuiteRan",
    "ConflictOpened",
    "ConflictResolved",
    "BehaviorRetired",
    "FunctionCompleted",
    "ProjectCompleted",
)

_KIND_SET = frozenset(EVENT_KINDS)


@dataclass(slots=True, frozen=True)
class Event:
    seq: int
    commit: int
    timestamp: int  # milliseconds
    kind: str
    payload: dict

    def to_value(self) -> dict:
        return {
            "seq": self.seq,
            "commit": self.commit,
            "timestamp": self.timestamp,
            "kind": self.kind,
            "payload": self.payload,
        }


def encode_line(event: Event) -> bytes:
    body = canonicalize(event.to_value())
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return body + b"#" + f"{crc:08x}".encode("ascii")


def decode_line(line: bytes) -> Event:
    """Parse one log line; raises CorruptLog on any structural fault."""
    body, sep, crc_text = line.rpartition(b"#")
    if not sep or len(crc_text) != 8:
        raise CorruptLog("missing checksum suffix")
    try:
        expected = int(crc_text, 16)
    except ValueError:
        raise CorruptLog("checksum is not hex") from None
    if (zlib.crc32(body) & 0xFFFFFFFF) != expected:
        raise CorruptLog("checksum mismatch")
    try:
        doc = parse_value(body)
    except ValueError as exc:
        raise CorruptLog(f"bad event JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptLog("event line is not an object")
    try:
        event = Event(
            seq=doc["seq"],
            commit=doc["commit"],
            timestamp=doc["timestamp"],
            kind=doc["kind"],
            payload=doc["payload"],
        )
    except KeyError as exc:
        raise CorruptLog(f"event missing field {exc}") from None
    if not isinstance(event.seq, int) or not isinstance(event.commit, int):
        raise CorruptLog("seq/commit must be integers")
    if event.kind not in _KIND_SET:
        raise CorruptLog(f"unknown event kind {event.kind!r}")
    if not isinstance(event.payload, dict):
        raise CorruptLog("payload must be an object")
    return event


@dataclass(slots=True, frozen=True)
class EventProto:
    """A planned event before the store stamps seq/commit/timestamp."""

    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in _KIND_SET:
            raise ValueError(f"unknown event kind {self.kind!r}")


def proto(kind: str, /, **payload: Value) -> EventProto:
    return EventProto(kind=kind, payload=payload)
