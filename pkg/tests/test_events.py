"""Event log semantics: gapless ordering, fan-out, and durable reload."""

import json

import pytest

from scicopilot.events import (
    EVENT_KINDS,
    EventLog,
    LogCorruptionError,
    SessionEvent,
    append_line,
    load_events,
)

CLOCK = lambda: "2026-01-01T00:00:00+00:00"  # noqa: E731


def make_event(seq=0, kind="user_message", agent="user", payload=None):
    return SessionEvent(seq=seq, timestamp=CLOCK(), kind=kind,
                        agent=agent, payload=payload or {"text": "hi"})


class TestSessionEvent:
    def test_all_ten_kinds_are_valid(self):
        assert len(EVENT_KINDS) == 10
        for kind in EVENT_KINDS:
            make_event(kind=kind)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown event kind"):
            make_event(kind="telemetry")

    def test_negative_seq_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            make_event(seq=-1)

    def test_json_round_trip(self):
        event = make_event(seq=3, kind="evaluation", agent="evaluation_specialist",
                           payload={"reward": 0.8, "note": "ünïcode"})
        line = event.to_json()
        assert SessionEvent.from_json(line) == event
        assert json.loads(line)["payload"]["note"] == "ünïcode"

    def test_json_keys_are_sorted(self):
        line = make_event().to_json()
        keys = list(json.loads(line))
        assert keys == sorted(keys)


class TestEventLog:
    def test_append_assigns_gapless_seq(self):
        log = EventLog(clock=CLOCK)
        log.append("user_message", "user", {"text": "a"})
        log.append("agent_message", "research_manager", {"text": "b"})
        assert [e.seq for e in log.events] == [0, 1]
        assert len(log) == 2

    def test_subscribers_see_events_in_order(self):
        log = EventLog(clock=CLOCK)
        seen = []
        unsubscribe = log.subscribe(seen.append)
        log.append("user_message", "user", {"text": "a"})
        unsubscribe()
        log.append("user_message", "user", {"text": "b"})
        assert [e.payload["text"] for e in seen] == ["a"]

    def test_writer_runs_before_listeners(self):
        order = []
        log = EventLog(clock=CLOCK, writer=lambda e: order.append("write"))
        log.subscribe(lambda e: order.append("stream"))
        log.append("user_message", "user", {"text": "a"})
        assert order == ["write", "stream"]

    def test_writer_failure_aborts_the_append(self):
        def broken(event):
            raise OSError("disk full")

        log = EventLog(clock=CLOCK, writer=broken)
        seen = []
        log.subscribe(seen.append)
        with pytest.raises(OSError):
            log.append("user_message", "user", {"text": "a"})
        assert len(log) == 0
        assert seen == []

    def test_from_events_validates_numbering(self):
        events = [make_event(seq=0), make_event(seq=2)]
        with pytest.raises(LogCorruptionError, match="seq 2 where 1 was expected"):
            EventLog.from_events(events)


class TestPersistence:
    def test_round_trip_through_file(self, tmp_path):
        path = tmp_path / "session.jsonl"
        events = [make_event(seq=i, kind="agent_message", agent="research_manager",
                             payload={"text": f"turn {i}"}) for i in range(3)]
        for event in events:
            append_line(path, event)
        assert load_events(path) == events

    def test_corrupt_line_named_by_position(self, tmp_path):
        path = tmp_path / "session.jsonl"
        append_line(path, make_event(seq=0))
        path.open("a").write("{not json\n")
        with pytest.raises(LogCorruptionError, match="line 2"):
            load_events(path)

    def test_seq_gap_named_by_position(self, tmp_path):
        path = tmp_path / "session.jsonl"
        append_line(path, make_event(seq=0))
        append_line(path, make_event(seq=2))
        with pytest.raises(LogCorruptionError, match="line 2: seq 2 where 1 was expected"):
            load_events(path)

    def test_missing_key_is_corruption(self, tmp_path):
        path = tmp_path / "session.jsonl"
        path.write_text('{"seq": 0, "kind": "user_message"}\n')
        with pytest.raises(LogCorruptionError, match="line 1"):
            load_events(path)

    def test_blank_lines_are_ignored(self, tmp_path):
        path = tmp_path / "session.jsonl"
        append_line(path, make_event(seq=0))
        path.open("a").write("\n")
        append_line(path, make_event(seq=1))
        assert len(load_events(path)) == 2
