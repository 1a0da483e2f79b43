"""Append-only event store: one UTF-8 JSON object per line, gapless seq,
schema-validated payloads, durable before acknowledgement.

The file starts with a schema-version header line {"v": 1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

LOG_VERSION = 1

EVENT_KINDS = (
    "session.message",
    "safety.verdict",
    "agent.handoff",
    "tool.call",
    "tool.result",
    "job.transition",
    "blackboard.put",
    "report.attached",
    "cycle.progress",
)


class SchemaViolation(ValueError):
    pass


class StorageFailure(RuntimeError):
    pass


class CorruptLog(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Event:
    seq: int
    ts: int
    kind: str
    session_id: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "kind": self.kind,
            "session_id": self.session_id,
            "payload": self.payload,
        }


# Required payload fields per kind: (field name, allowed types).
_PAYLOAD_SCHEMAS: dict[str, tuple[tuple[str, tuple[type, ...]], ...]] = {
    "session.message": (("speaker", (str,)), ("text", (str,))),
    "safety.verdict": (("decision", (str,)), ("text", (str,))),
    "agent.handoff": (("from", (str,)), ("to", (str,)), ("reason", (str,)), ("at_version", (int,))),
    "tool.call": (("tool", (str,)), ("args", (dict,))),
    "tool.result": (("tool", (str,)), ("ok", (bool,))),
    "job.transition": (("job_id", (int,)), ("to", (str,)), ("at", (int,))),
    "blackboard.put": (("key", (str,)), ("version", (int,)), ("author", (str,))),
    "report.attached": (("job_id", (int,)), ("doc", (dict,))),
    "cycle.progress": (("phase", (str,)),),
}


def validate_payload(kind: str, payload: dict) -> None:
    if kind not in EVENT_KINDS:
        raise SchemaViolation(f"unknown event kind {kind!r}")
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{kind}: payload must be an object")
    for name, types in _PAYLOAD_SCHEMAS[kind]:
        if name not in payload:
            raise SchemaViolation(f"{kind}: payload missing field {name!r}")
        value = payload[name]
        if isinstance(value, bool) and bool not in types:
            raise SchemaViolation(f"{kind}: field {name!r} has wrong type")
        if not isinstance(value, tuple(types)):
            raise SchemaViolation(f"{kind}: field {name!r} has wrong type")
    try:
        json.dumps(payload)
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"{kind}: payload is not JSON-serializable: {exc}") from exc


class EventStore:
    """Gapless, append-only event log, optionally file-backed.

    Reopening an existing log continues the seq counter; a truncated or
    malformed line raises CorruptLog naming the file line number.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._events: list[Event] = []
        self._file = None
        if self.path is not None:
            if self.path.exists() and self.path.stat().st_size > 0:
                self._load()
                self._file = self.path.open("a", encoding="utf-8")
            else:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._file = self.path.open("w", encoding="utf-8")
                self._file.write(json.dumps({"v": LOG_VERSION}) + "\n")
                self._file.flush()

    def _load(self) -> None:
        with self.path.open("r", encoding="utf-8") as handle:
            lines = handle.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        else:
            # The file does not end with a newline: the final write was cut off.
            raise CorruptLog("truncated final line", len(lines))
        if not lines:
            raise CorruptLog("missing header", 1)
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError:
            raise CorruptLog("unreadable header", 1) from None
        if not isinstance(header, dict) or header.get("v") != LOG_VERSION:
            raise CorruptLog(f"unsupported log version: {header!r}", 1)
        expected_seq = 1
        for line_no, line in enumerate(lines[1:], start=2):
            try:
                raw = json.loads(line)
            except json.JSONDecodeError:
                raise CorruptLog("unreadable event", line_no) from None
            try:
                event = Event(
                    seq=raw["seq"],
                    ts=raw["ts"],
                    kind=raw["kind"],
                    session_id=raw["session_id"],
                    payload=raw["payload"],
                )
                validate_payload(event.kind, event.payload)
            except (KeyError, SchemaViolation) as exc:
                raise CorruptLog(f"bad event: {exc}", line_no) from None
            if event.seq != expected_seq:
                raise CorruptLog(
                    f"seq gap: expected {expected_seq}, found {event.seq}", line_no
                )
            expected_seq += 1
            self._events.append(event)

    @property
    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else 0

    def events(self) -> list[Event]:
        return list(self._events)

    def events_after(self, seq: int, session_id: str | None = None) -> list[Event]:
        return [
            e
            for e in self._events
            if e.seq > seq and (session_id is None or e.session_id == session_id)
        ]

    def append(self, kind: str, session_id: str, payload: dict, ts: int) -> Event:
        """Validate, persist (flush before acknowledging), then record."""
        validate_payload(kind, payload)
        event = Event(
            seq=self.last_seq + 1, ts=ts, kind=kind, session_id=session_id, payload=payload
        )
        if self._file is not None:
            try:
                self._file.write(
                    json.dumps(event.to_dict(), separators=(",", ":"), sort_keys=True) + "\n"
                )
                self._file.flush()
            except (OSError, ValueError) as exc:  # ValueError: write on closed file
                raise StorageFailure(str(exc)) from exc
        self._events.append(event)
        return event

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __iter__(self) -> Iterable[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)
