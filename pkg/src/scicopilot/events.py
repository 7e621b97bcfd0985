"""Append-only session event log.

Everything observable about a session is an ordered stream of SessionEvents:
user messages, agent responses, delegations, tool traffic, evaluations,
figure stand-ins, budget changes, errors, and final answers. Sequence
numbers are gapless from 0 and events are immutable once appended, so a
session can be reconstructed exactly from its log.

The log itself is storage-agnostic: an optional ``writer`` callable is
invoked for every event before in-memory listeners see it, which is how the
service layer guarantees persistence-before-streaming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

EVENT_KINDS = (
    "user_message",
    "agent_message",
    "delegation",
    "tool_call",
    "tool_result",
    "evaluation",
    "figure_standin",
    "budget",
    "error",
    "final_answer",
)


class LogCorruptionError(ValueError):
    """A persisted event log failed validation on load."""


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: str
    kind: str
    agent: str
    payload: dict

    def __post_init__(self):
        if self.seq < 0:
            raise ValueError(f"seq must be non-negative, got {self.seq}")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if not self.agent:
            raise ValueError("agent must be non-empty")

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind,
            "agent": self.agent,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "SessionEvent":
        raw = json.loads(line)
        return cls(
            seq=raw["seq"],
            timestamp=raw["timestamp"],
            kind=raw["kind"],
            agent=raw["agent"],
            payload=raw["payload"],
        )


class EventLog:
    """In-memory event sequence with write-before-stream fan-out.

    ``writer`` (when given) runs synchronously before any subscriber is
    notified; a writer failure aborts the append, so no client ever
    observes an unpersisted event.
    """

    def __init__(
        self,
        clock: Optional[Callable[[], str]] = None,
        writer: Optional[Callable[[SessionEvent], None]] = None,
    ):
        self._events: list[SessionEvent] = []
        self._clock = clock or utc_now
        self._writer = writer
        self._listeners: list[Callable[[SessionEvent], None]] = []

    def __len__(self) -> int:
        return len(self._events)

    @property
    def events(self) -> tuple[SessionEvent, ...]:
        return tuple(self._events)

    def append(self, kind: str, agent: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=len(self._events),
            timestamp=self._clock(),
            kind=kind,
            agent=agent,
            payload=dict(payload),
        )
        if self._writer is not None:
            self._writer(event)
        self._events.append(event)
        for listener in list(self._listeners):
            listener(event)
        return event

    def subscribe(self, listener: Callable[[SessionEvent], None]) -> Callable[[], None]:
        """Register a live listener; returns an unsubscribe callable."""
        self._listeners.append(listener)

        def unsubscribe() -> None:
            if listener in self._listeners:
                self._listeners.remove(listener)

        return unsubscribe

    @classmethod
    def from_events(cls, events, **kwargs) -> "EventLog":
        """Rebuild a log from already-validated events (e.g. a loaded file)."""
        log = cls(**kwargs)
        for expected, event in enumerate(events):
            if event.seq != expected:
                raise LogCorruptionError(
                    f"event log has seq {event.seq} where {expected} was expected"
                )
            log._events.append(event)
        return log


def append_line(path: Path, event: SessionEvent) -> None:
    """Durably append one event to a JSON-lines file."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(event.to_json() + "\n")
        fh.flush()


def load_events(path: Path) -> list[SessionEvent]:
    """Load and validate a JSON-lines event file.

    Raises LogCorruptionError naming the offending position when a line is
    unreadable or the seq numbering has a gap.
    """
    events: list[SessionEvent] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            event = SessionEvent.from_json(line)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise LogCorruptionError(f"event log line {line_no}: {exc}") from exc
        expected = len(events)
        if event.seq != expected:
            raise LogCorruptionError(
                f"event log line {line_no}: seq {event.seq} where {expected} was expected"
            )
        events.append(event)
    return events
