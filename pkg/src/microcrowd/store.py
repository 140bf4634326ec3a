"""Append-only event log with per-line CRC and commit-boundary recovery.

Layout: one event per line, `<canonical JSON>#<crc32 hex>`, gapless seq
starting at 1. A commit may span several lines; each event's `commit` field
names the seq of the commit's final event, so recovery can distinguish a
half-written tail (truncate back to the last commit boundary) from interior
corruption (refuse writes: CorruptLog).
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import CorruptLog, StorageFull
from .events import Event, EventProto, decode_line, encode_line
from .state import ServiceState, fold
from .values import canonicalize, parse_value


class EventStore:
    """Owns the log file; the service serializes access to it."""

    def __init__(self, path: str | os.PathLike, fsync: bool = False):
        self.path = Path(path)
        self.fsync = fsync
        self.events: list[Event] = []
        self.failed = False
        if self.path.exists():
            self._recover()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    # --- recovery -------------------------------------------------------------

    def _recover(self) -> None:
        raw = self.path.read_bytes()
        lines = raw.split(b"\n")
        if lines and lines[-1] == b"":
            lines.pop()  # normal newline-terminated file
        elif lines:
            lines.pop()  # unterminated tail: the commit never became durable
        parsed: list[Event] = []
        fault_at: int | None = None
        for i, line in enumerate(lines):
            try:
                event = decode_line(line)
                if event.seq != len(parsed) + 1:
                    raise CorruptLog(f"expected seq {len(parsed) + 1}, got {event.seq}")
            except CorruptLog:
                fault_at = i
                break
            parsed.append(event)
        if fault_at is not None and any(_decodes(l) for l in lines[fault_at + 1 :]):
            # valid lines beyond the fault: interior damage, not a crash tail.
            # Keep the valid prefix readable, refuse appends, leave the file alone.
            self.failed = True
            self.events = _whole_commits(parsed)
            return
        # clean file or crash residue: keep whole commits, truncate the rest
        kept = _whole_commits(parsed)
        self.events = kept
        keep_bytes = sum(len(encode_line(e)) + 1 for e in kept)
        if keep_bytes != len(raw):
            with open(self.path, "r+b") as fh:
                fh.truncate(keep_bytes)

    # --- append ----------------------------------------------------------------

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    def stamp(self, protos: list[EventProto], timestamp: int) -> list[Event]:
        """Assign seq/commit numbers for one commit (does not append)."""
        first = self.last_seq + 1
        final = self.last_seq + len(protos)
        return [
            Event(seq=first + i, commit=final, timestamp=timestamp, kind=p.kind, payload=p.payload)
            for i, p in enumerate(protos)
        ]

    def append(self, events: list[Event]) -> None:
        """Durably append one commit; all-or-nothing."""
        if self.failed:
            raise CorruptLog("store is failed; appends refused")
        if not events:
            return
        expected = self.last_seq + 1
        final = events[-1].seq
        for i, event in enumerate(events):
            if event.seq != expected + i or event.commit != final:
                raise CorruptLog("commit is not gapless or mis-stamped")
        block = b"".join(encode_line(e) + b"\n" for e in events)
        try:
            with open(self.path, "ab") as fh:
                fh.write(block)
                fh.flush()
                if self.fsync:
                    os.fsync(fh.fileno())
        except OSError as exc:
            self.failed = True
            raise StorageFull(f"append failed: {exc}") from exc
        self.events.extend(events)

    # --- reads -----------------------------------------------------------------

    def replay(self, upto_seq: int | None = None) -> ServiceState:
        """Fold events up to a seq (defaults to all) into a fresh state."""
        events = self.events if upto_seq is None else self.events[:upto_seq]
        return fold(list(events))

    def events_for(self, project_id: str) -> list[Event]:
        return [e for e in self.events if e.payload.get("projectId") == project_id]


def _decodes(line: bytes) -> bool:
    try:
        decode_line(line)
        return True
    except CorruptLog:
        return False


def _whole_commits(parsed: list[Event]) -> list[Event]:
    """Drop a trailing incomplete commit (last kept line has seq == commit)."""
    boundary = 0
    for i, event in enumerate(parsed):
        if event.seq == event.commit:
            boundary = i + 1
    return parsed[:boundary]


# --- snapshots ------------------------------------------------------------------


def write_snapshot(state: ServiceState, path: str | os.PathLike) -> None:
    doc = {"asOfSeq": state.last_seq, "state": state.to_value()}
    Path(path).write_bytes(canonicalize(doc))


def read_snapshot(path: str | os.PathLike) -> ServiceState:
    doc = parse_value(Path(path).read_bytes())
    if not isinstance(doc, dict) or "asOfSeq" not in doc or "state" not in doc:
        raise CorruptLog("snapshot document malformed")
    state = ServiceState.from_value(doc["state"])
    if state.last_seq != doc["asOfSeq"]:
        raise CorruptLog("snapshot asOfSeq disagrees with embedded state")
    return state


def replay_with_snapshot(snapshot_path: str | os.PathLike, store: EventStore) -> ServiceState:
    """Fold a snapshot plus the log tail after it."""
    state = read_snapshot(snapshot_path)
    tail = [e for e in store.events if e.seq > state.last_seq]
    return fold(tail, base=state)


def compare_logs(path_a: str | os.PathLike, path_b: str | os.PathLike) -> dict:
    """Line-by-line comparison; reports the first divergent seq if any."""
    result: dict = {"identical": False}
    try:
        lines_a = Path(path_a).read_bytes().split(b"\n")
        lines_b = Path(path_b).read_bytes().split(b"\n")
    except OSError as exc:
        raise CorruptLog(f"cannot read log: {exc}") from exc
    lines_a = [l for l in lines_a if l != b""]
    lines_b = [l for l in lines_b if l != b""]
    for i in range(max(len(lines_a), len(lines_b))):
        a = lines_a[i] if i < len(lines_a) else None
        b = lines_b[i] if i < len(lines_b) else None
        if a != b:
            result["divergesAtSeq"] = i + 1
            return result
    result["identical"] = True
    return result
