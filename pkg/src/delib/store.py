"""Append-only event log and canonical snapshots.

Layout under a data directory:

    <data_dir>/<deliberation_id>/events.log        one JSON record per line
    <data_dir>/<deliberation_id>/snapshots/<seq>.snap

Records and snapshots are serialized canonically (sorted keys, compact
separators) so value-equal states produce byte-equal documents.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Optional

from .engine import Clock, Deliberation, logical_clock
from .errors import CorruptLog, Invalid, NotFound, VersionError
from .model import EngineConfig, Event, EventKind, SCHEMA_VERSION
from .state import DeliberationState

_RECORD_FIELDS = {"schema_version", "seq", "timestamp", "deliberation", "kind", "payload"}


def canonical_json(doc: Any) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def event_to_record(deliberation_id: str, event: Event) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "deliberation": deliberation_id,
        **event.to_doc(),
    }


def record_to_event(record: dict[str, Any]) -> Event:
    missing = _RECORD_FIELDS - set(record)
    if missing:
        raise CorruptLog(f"record missing fields: {sorted(missing)}")
    if record["schema_version"] != SCHEMA_VERSION:
        raise CorruptLog(f"record schema_version {record['schema_version']} unsupported")
    try:
        kind = EventKind(record["kind"])
    except ValueError:
        raise CorruptLog(f"unknown event kind {record['kind']!r}") from None
    return Event(
        seq=record["seq"],
        timestamp=record["timestamp"],
        kind=kind,
        payload=record["payload"],
    )


def read_events(path: str | Path) -> list[Event]:
    """Parse an event log file, enforcing gapless ascending sequence."""
    events: list[Event] = []
    path = Path(path)
    if not path.exists():
        raise NotFound(f"no event log at {path}")
    with path.open("rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.endswith(b"\n"):
                raise CorruptLog(f"line {line_no} is truncated")
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorruptLog(f"line {line_no} is not valid JSON: {exc}") from None
            event = record_to_event(record)
            expected = events[-1].seq + 1 if events else 1
            if event.seq != expected:
                raise CorruptLog(
                    f"line {line_no}: seq {event.seq}, expected {expected}"
                )
            events.append(event)
    if not events:
        raise CorruptLog(f"event log {path} is empty")
    return events


def replay(events: Iterable[Event], *, clock: Clock = logical_clock) -> Deliberation:
    return Deliberation.from_events(events, clock=clock)


def replay_log(path: str | Path, *, clock: Clock = logical_clock) -> Deliberation:
    return replay(read_events(path), clock=clock)


def snapshot(state: DeliberationState) -> bytes:
    return canonical_json({"schema_version": SCHEMA_VERSION, "state": state.to_doc()})


def load_snapshot(data: bytes | str) -> DeliberationState:
    doc = json.loads(data)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(
            f"snapshot schema_version {doc.get('schema_version')!r} unsupported"
        )
    return DeliberationState.from_doc(doc["state"])


class FileEventLog:
    """Durable append sink for one deliberation's events."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._last_seq = 0
        if self.path.exists():
            for event in read_events(self.path):
                self._last_seq = event.seq

    def append(self, deliberation_id: str, event: Event) -> int:
        if event.seq != self._last_seq + 1:
            raise CorruptLog(
                f"append seq {event.seq} does not follow {self._last_seq}"
            )
        record = canonical_json(event_to_record(deliberation_id, event))
        with self.path.open("ab") as handle:
            handle.write(record + b"\n")
        self._last_seq = event.seq
        return event.seq


class DeliberationStore:
    """Directory of persisted deliberations."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def _dir(self, deliberation_id: str) -> Path:
        return self.data_dir / deliberation_id

    def events_path(self, deliberation_id: str) -> Path:
        return self._dir(deliberation_id) / "events.log"

    def snapshot_path(self, deliberation_id: str, seq: int) -> Path:
        return self._dir(deliberation_id) / "snapshots" / f"{seq}.snap"

    def list_ids(self) -> list[str]:
        if not self.data_dir.exists():
            return []
        return sorted(
            entry.name
            for entry in self.data_dir.iterdir()
            if (entry / "events.log").exists()
        )

    def exists(self, deliberation_id: str) -> bool:
        return self.events_path(deliberation_id).exists()

    def create(
        self,
        deliberation_id: str,
        config: Optional[EngineConfig] = None,
        roster: Iterable[str] = (),
        *,
        clock: Clock = logical_clock,
    ) -> Deliberation:
        if self.exists(deliberation_id):
            raise Invalid(f"deliberation {deliberation_id!r} already exists")
        log = FileEventLog(self.events_path(deliberation_id))
        return Deliberation(
            deliberation_id,
            config,
            roster,
            sink=lambda event: log.append(deliberation_id, event),
            clock=clock,
        )

    def open(self, deliberation_id: str, *, clock: Clock = logical_clock) -> Deliberation:
        if not self.exists(deliberation_id):
            raise NotFound(f"unknown deliberation {deliberation_id!r}")
        events = read_events(self.events_path(deliberation_id))
        engine = Deliberation.from_events(events, clock=clock)
        log = FileEventLog(self.events_path(deliberation_id))
        engine.sink = lambda event: log.append(deliberation_id, event)
        return engine

    def write_snapshot(self, engine: Deliberation) -> Path:
        path = self.snapshot_path(engine.state.id, engine.state.last_seq)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(snapshot(engine.state))
        return path

    def dump_events(self, engine: Deliberation) -> Path:
        """Write a full event log in one pass (used by batch simulation)."""
        path = self.events_path(engine.state.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as handle:
            for event in engine.events:
                handle.write(canonical_json(event_to_record(engine.state.id, event)) + b"\n")
        return path
