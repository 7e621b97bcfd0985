"""Session service behavior: durability, conflicts, streaming, and HTTP."""

import json

import pytest
from fastapi.testclient import TestClient

from scicopilot.config import CASE1_GOLDEN_KINDS, CASE1_QUESTION
from scicopilot.events import LogCorruptionError, load_events
from scicopilot.orchestrator import Engine
from scicopilot.providers import ScriptEntry, ScriptedProvider
from scicopilot.service import (
    SessionConflictError,
    SessionService,
    UnknownSessionError,
    case1_engine,
    create_app,
    run_case1,
)

CLOCK = lambda: "2026-01-01T00:00:00+00:00"  # noqa: E731

ANSWER_SCRIPT = [ScriptEntry(text="<thinking>easy</thinking><answer>42</answer>")]


def make_service(tmp_path, script=ANSWER_SCRIPT):
    engine = Engine(
        ScriptedProvider(script), artifact_dir=tmp_path / "artifacts", clock=CLOCK
    )
    return SessionService(engine, tmp_path / "sessions")


class TestSessionLifecycle:
    def test_create_starts_empty_and_idle(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        assert len(session.log) == 0
        assert session.status == "idle"
        assert (tmp_path / "sessions" / f"{session.session_id}.jsonl").exists()

    def test_session_ids_are_distinct(self, tmp_path):
        service = make_service(tmp_path)
        ids = {service.create_session().session_id for _ in range(5)}
        assert len(ids) == 5

    def test_broken_storage_surfaces_as_os_error(self, tmp_path):
        blocker = tmp_path / "not-a-dir"
        blocker.write_text("occupied")
        engine = Engine(ScriptedProvider(ANSWER_SCRIPT), artifact_dir=tmp_path / "a")
        with pytest.raises(OSError):
            SessionService(engine, blocker / "sessions")

    def test_unknown_session_rejected(self, tmp_path):
        service = make_service(tmp_path)
        with pytest.raises(UnknownSessionError):
            service.get_history("nope")


class TestPostMessage:
    def test_direct_answer_round_trip(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        result = service.post_message(session.session_id, "What is six times seven?")
        assert result.answer == "42"
        assert [e.kind for e in service.get_history(session.session_id)] == [
            "user_message", "agent_message", "final_answer",
        ]
        assert session.title == "What is six times seven?"

    def test_events_hit_disk_as_they_happen(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        service.post_message(session.session_id, "What is six times seven?")
        on_disk = load_events(tmp_path / "sessions" / f"{session.session_id}.jsonl")
        assert on_disk == list(session.log.events)

    def test_post_on_running_session_conflicts_without_logging(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        session.status = "running"
        with pytest.raises(SessionConflictError):
            service.post_message(session.session_id, "second")
        assert len(session.log) == 0

    def test_history_survives_service_restart(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        service.post_message(session.session_id, "What is six times seven?")
        before = service.get_history(session.session_id)

        reborn = make_service(tmp_path)
        after = reborn.get_history(session.session_id)
        assert after == before
        summaries = reborn.list_sessions()
        assert [s["session_id"] for s in summaries] == [session.session_id]
        assert summaries[0]["events"] == 3
        assert summaries[0]["title"] == "What is six times seven?"

    def test_restarted_session_accepts_new_turns_and_extends_the_log(self, tmp_path):
        script = ANSWER_SCRIPT + [ScriptEntry(text="<answer>still here</answer>")]
        service = make_service(tmp_path, script)
        session = service.create_session()
        service.post_message(session.session_id, "first")

        reborn = make_service(tmp_path, script)
        # the fresh scripted provider replays from entry one again
        result = reborn.post_message(session.session_id, "second")
        assert result.answer == "42"
        events = load_events(tmp_path / "sessions" / f"{session.session_id}.jsonl")
        assert [e.seq for e in events] == list(range(6))

    def test_corrupt_log_surfaces_position(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        service.post_message(session.session_id, "What is six times seven?")
        path = tmp_path / "sessions" / f"{session.session_id}.jsonl"
        path.open("a").write('{"seq": 9, "timestamp": "t", "kind": "error", '
                             '"agent": "system", "payload": {}}\n')
        reborn = make_service(tmp_path)
        with pytest.raises(LogCorruptionError, match="seq 9 where 3 was expected"):
            reborn.get_history(session.session_id)


class TestStreamTurn:
    def test_every_streamed_event_is_already_on_disk(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        path = tmp_path / "sessions" / f"{session.session_id}.jsonl"
        seen = []
        for event in service.stream_turn(session.session_id, "stream it"):
            persisted = load_events(path)
            assert event.seq < len(persisted)
            assert persisted[event.seq] == event
            seen.append(event.kind)
        assert seen == ["user_message", "agent_message", "final_answer"]

    def test_stream_conflicts_while_running(self, tmp_path):
        service = make_service(tmp_path)
        session = service.create_session()
        session.status = "running"
        with pytest.raises(SessionConflictError):
            service.stream_turn(session.session_id, "busy")


def sse_events(body: str) -> list[dict]:
    events = []
    for block in body.strip().split("\n\n"):
        for line in block.splitlines():
            if line.startswith("data: "):
                events.append(json.loads(line[len("data: "):]))
    return events


class TestHttpApi:
    def _client(self, tmp_path, script=ANSWER_SCRIPT):
        service = make_service(tmp_path, script)
        return service, TestClient(create_app(service))

    def test_create_list_and_history(self, tmp_path):
        service, client = self._client(tmp_path)
        created = client.post("/sessions")
        assert created.status_code == 201
        session_id = created.json()["session_id"]

        posted = client.post(f"/sessions/{session_id}/messages",
                             json={"text": "What is six times seven?"})
        assert posted.status_code == 200
        assert posted.headers["content-type"].startswith("text/event-stream")
        streamed = sse_events(posted.text)
        assert [e["kind"] for e in streamed] == [
            "user_message", "agent_message", "final_answer",
        ]
        assert "id: 0" in posted.text

        history = client.get(f"/sessions/{session_id}/history")
        assert history.status_code == 200
        assert history.json()["events"] == streamed

        listing = client.get("/sessions")
        assert listing.json()["sessions"][0]["session_id"] == session_id

    def test_unknown_session_is_404(self, tmp_path):
        _, client = self._client(tmp_path)
        assert client.get("/sessions/nope/history").status_code == 404
        assert client.post("/sessions/nope/messages",
                           json={"text": "hi"}).status_code == 404

    def test_running_session_is_409(self, tmp_path):
        service, client = self._client(tmp_path)
        session_id = client.post("/sessions").json()["session_id"]
        service.get_session(session_id).status = "running"
        response = client.post(f"/sessions/{session_id}/messages", json={"text": "hi"})
        assert response.status_code == 409
        assert service.get_history(session_id) == ()

    def test_empty_text_is_422(self, tmp_path):
        _, client = self._client(tmp_path)
        session_id = client.post("/sessions").json()["session_id"]
        assert client.post(f"/sessions/{session_id}/messages",
                           json={"text": ""}).status_code == 422

    def test_artifacts_served_read_only(self, tmp_path):
        service, client = self._client(tmp_path)
        service.artifact_dir.mkdir(parents=True, exist_ok=True)
        (service.artifact_dir / "fig.png").write_bytes(b"\x89PNG fake")
        ok = client.get("/artifacts/fig.png")
        assert ok.status_code == 200
        assert ok.headers["content-type"] == "image/png"
        assert ok.content == b"\x89PNG fake"
        assert client.get("/artifacts/missing.png").status_code == 404
        assert client.get("/artifacts/..%2Fsecret").status_code == 404


class TestCaseStudyThroughService:
    def test_streamed_replay_matches_golden_kinds(self, tmp_path):
        engine = case1_engine(tmp_path / "artifacts", clock=CLOCK)
        service = SessionService(engine, tmp_path / "sessions")
        client = TestClient(create_app(service))
        session_id = client.post("/sessions").json()["session_id"]
        question = CASE1_QUESTION.read_text(encoding="utf-8").strip()
        response = client.post(f"/sessions/{session_id}/messages",
                               json={"text": question})
        golden = CASE1_GOLDEN_KINDS.read_text(encoding="utf-8").split()
        streamed = sse_events(response.text)
        assert [e["kind"] for e in streamed] == golden
        history = client.get(f"/sessions/{session_id}/history").json()["events"]
        assert len(history) == len(streamed)

    def test_run_case1_is_self_contained(self, tmp_path):
        session, result = run_case1(tmp_path / "artifacts", clock=CLOCK)
        assert result.answer is not None
        assert "not reproducible at desk scale" in result.answer.lower()
        golden = CASE1_GOLDEN_KINDS.read_text(encoding="utf-8").split()
        assert [e.kind for e in session.log.events] == golden
