"""Append-only per-project event log.

Every state change lands here as one event with a gapless sequence
number and a logical tick, so a project can be rebuilt by replaying the
log from the start, or from any prefix after a crash. Payloads carry
full records (move records, snippet records, paper records), never
references that would require re-running a language model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator

from .digests import canonical_json


class EventKind(str, Enum):
    PROJECT_CREATED = "project_created"
    THREAD_CREATED = "thread_created"
    MOVE_POSTED = "move_posted"
    PROPOSAL_EDITED = "proposal_edited"
    PERSONA_EDITED = "persona_edited"
    MEMORY_DISTILLED = "memory_distilled"
    PAPER_INSERTED = "paper_inserted"


class EventLogError(Exception):
    pass


class GapInLog(EventLogError):
    def __init__(self, expected: int, found: int):
        super().__init__(f"expected event seq {expected}, found {found}")
        self.expected = expected
        self.found = found


class CorruptPayload(EventLogError):
    pass


@dataclass(frozen=True)
class Event:
    seq: int  # gapless, starts at 1
    kind: EventKind
    at: int  # logical tick
    payload: dict

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind.value,
            "at": self.at,
            "payload": self.payload,
        }

    @classmethod
    def from_record(cls, record: dict) -> Event:
        try:
            kind = EventKind(record["kind"])
            seq = int(record["seq"])
            at = int(record["at"])
            payload = record["payload"]
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptPayload(f"bad event record: {exc}") from exc
        if not isinstance(payload, dict):
            raise CorruptPayload("event payload must be an object")
        return cls(seq=seq, kind=kind, at=at, payload=payload)


class EventLog:
    """In-memory event sequence, optionally mirrored to a JSONL file."""

    def __init__(self, path: str | os.PathLike[str] | None = None):
        self._events: list[Event] = []
        self._path = os.fspath(path) if path is not None else None

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    @property
    def events(self) -> tuple[Event, ...]:
        return tuple(self._events)

    @property
    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else 0

    def append(self, kind: EventKind | str, payload: dict) -> Event:
        event = Event(
            seq=self.last_seq + 1,
            kind=EventKind(kind),
            at=self.last_seq + 1,
            payload=payload,
        )
        self._events.append(event)
        if self._path is not None:
            with open(self._path, "a", encoding="utf-8") as handle:
                handle.write(canonical_json(event.to_record()) + "\n")
        return event

    def extend_replayed(self, events: Iterable[Event]) -> None:
        """Adopt already-persisted events without writing them again."""
        for event in events:
            if event.seq != self.last_seq + 1:
                raise GapInLog(self.last_seq + 1, event.seq)
            self._events.append(event)

    def verify(self) -> list[str]:
        problems = []
        for i, event in enumerate(self._events, start=1):
            if event.seq != i:
                problems.append(f"seq gap: position {i} holds seq {event.seq}")
        return problems


def load_events(path: str | os.PathLike[str]) -> list[Event]:
    """Read a JSONL event file, enforcing order and payload shape."""
    events: list[Event] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptPayload(f"line {lineno}: {exc}") from exc
            event = Event.from_record(record)
            if event.seq != len(events) + 1:
                raise GapInLog(len(events) + 1, event.seq)
            events.append(event)
    return events


def replay(events: Iterable[Event], apply: Callable[[Event], None]) -> int:
    """Feed events through ``apply`` in order, enforcing gaplessness."""
    count = 0
    for event in events:
        if event.seq != count + 1:
            raise GapInLog(count + 1, event.seq)
        apply(event)
        count += 1
    return count
