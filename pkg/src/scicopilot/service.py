"""Session lifecycle, durable storage, and the streaming HTTP API.

Each session persists as one append-only JSON-lines file under the session
directory; the in-memory session is just a cache over that file and can be
rebuilt from it at any time. Events are written to disk before any stream
subscriber sees them, so a client can never observe state that would not
survive a crash.

The HTTP layer exposes the session operations plus read-only artifact
serving. Posting a message answers with a server-sent-event stream that
carries each session event as one JSON message, ending when the turn ends.
"""

from __future__ import annotations

import mimetypes
import queue
import threading
import uuid
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from .config import CASE1_QUESTION, CASE1_SCRIPT, STANDARD_FIXTURE
from .events import LogCorruptionError, SessionEvent, append_line, load_events
from .lake import DataLake
from .orchestrator import Engine, Session, TurnResult, run_user_turn
from .providers import ScriptedProvider


class UnknownSessionError(KeyError):
    """No session with the requested id exists in memory or on disk."""


class SessionConflictError(RuntimeError):
    """A message was posted while the session was already running a turn."""


class SessionService:
    """Registry of live sessions over one engine and one storage directory."""

    def __init__(self, engine: Engine, session_dir):
        self._engine = engine
        self._session_dir = Path(session_dir)
        self._session_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    @property
    def artifact_dir(self) -> Path:
        return self._engine.artifact_dir

    def _path(self, session_id: str) -> Path:
        return self._session_dir / f"{session_id}.jsonl"

    def _writer(self, session_id: str):
        path = self._path(session_id)
        return lambda event: append_line(path, event)

    def create_session(self) -> Session:
        session_id = uuid.uuid4().hex[:12]
        self._path(session_id).touch()
        session = self._engine.new_session(session_id, writer=self._writer(session_id))
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        """Return the live session, restoring it from disk when needed."""
        with self._lock:
            session = self._sessions.get(session_id)
        if session is not None:
            return session
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSessionError(session_id)
        events = load_events(path)
        session = self._engine.restore_session(
            session_id, events, writer=self._writer(session_id)
        )
        with self._lock:
            return self._sessions.setdefault(session_id, session)

    def list_sessions(self) -> list[dict]:
        known = {path.stem for path in self._session_dir.glob("*.jsonl")}
        with self._lock:
            known.update(self._sessions)
        summaries = []
        for session_id in known:
            session = self.get_session(session_id)
            summaries.append(
                {
                    "session_id": session.session_id,
                    "created_at": session.created_at,
                    "title": session.title,
                    "events": len(session.log),
                }
            )
        summaries.sort(key=lambda item: (item["created_at"], item["session_id"]))
        return summaries

    def get_history(self, session_id: str) -> tuple[SessionEvent, ...]:
        return self.get_session(session_id).log.events

    def post_message(self, session_id: str, text: str) -> TurnResult:
        """Run one turn to completion and return its result."""
        session = self.get_session(session_id)
        if session.status == "running":
            raise SessionConflictError(f"session {session_id} is already running a turn")
        if not session.title:
            session.title = text[:80]
        return run_user_turn(session, text)

    def stream_turn(self, session_id: str, text: str) -> Iterator[SessionEvent]:
        """Run one turn on a worker thread, yielding events as they land.

        Every yielded event has already been written to the session file
        (the log's writer runs before its subscribers).
        """
        session = self.get_session(session_id)
        if session.status == "running":
            raise SessionConflictError(f"session {session_id} is already running a turn")
        if not session.title:
            session.title = text[:80]

        feed: queue.Queue = queue.Queue()
        unsubscribe = session.log.subscribe(feed.put)

        def worker():
            try:
                run_user_turn(session, text)
            finally:
                feed.put(None)

        threading.Thread(target=worker, daemon=True).start()

        def events() -> Iterator[SessionEvent]:
            try:
                while True:
                    event = feed.get()
                    if event is None:
                        break
                    yield event
            finally:
                unsubscribe()

        return events()


# -- HTTP API --------------------------------------------------------------------


class MessageBody(BaseModel):
    text: str = Field(min_length=1)


def _sse_line(event: SessionEvent) -> str:
    return f"id: {event.seq}\ndata: {event.to_json()}\n\n"


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="scicopilot session service")

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        session = service.create_session()
        return {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "title": session.title,
        }

    @app.get("/sessions")
    def list_sessions() -> dict:
        return {"sessions": service.list_sessions()}

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str) -> dict:
        try:
            events = service.get_history(session_id)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        except LogCorruptionError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return {
            "session_id": session_id,
            "events": [event.to_dict() for event in events],
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody) -> StreamingResponse:
        try:
            events = service.stream_turn(session_id, body.text)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        except SessionConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return StreamingResponse(
            (_sse_line(event) for event in events),
            media_type="text/event-stream",
        )

    @app.get("/artifacts/{name}")
    def get_artifact(name: str) -> Response:
        if "/" in name or "\\" in name or name.startswith("."):
            raise HTTPException(status_code=404, detail="unknown artifact")
        path = service.artifact_dir / name
        if not path.is_file():
            raise HTTPException(status_code=404, detail="unknown artifact")
        media_type = mimetypes.guess_type(name)[0] or "application/octet-stream"
        return Response(content=path.read_bytes(), media_type=media_type)

    return app


# -- packaged case-study replay ----------------------------------------------------


def case1_engine(artifact_dir, clock=None) -> Engine:
    """Engine wired exactly as the packaged case-study replay expects."""
    provider = ScriptedProvider.from_jsonl(CASE1_SCRIPT)
    lake = DataLake.load_fixture(
        STANDARD_FIXTURE, artifact_dir=Path(artifact_dir) / "lake"
    )
    return Engine(provider, lake=lake, artifact_dir=artifact_dir, clock=clock)


def run_case1(artifact_dir, clock=None, session_id: str = "case1"):
    """Replay the packaged case study; returns (session, turn result)."""
    engine = case1_engine(artifact_dir, clock=clock)
    session = engine.new_session(session_id)
    question = CASE1_QUESTION.read_text(encoding="utf-8").strip()
    result = run_user_turn(session, question)
    return session, result
