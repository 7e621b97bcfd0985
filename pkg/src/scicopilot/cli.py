"""Terminal entry points: interactive chat, transcript replay, fixture checks."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import CASE1_GOLDEN_KINDS, get_settings
from .events import LogCorruptionError, SessionEvent, load_events
from .lake import DataLake
from .orchestrator import Engine
from .providers import LiveProvider, ScriptedProvider
from .sandbox import Sandbox, subprocess_backends
from .service import SessionService, run_case1


def format_event(event: SessionEvent) -> str:
    """One readable line per event, shared by chat streaming and replay."""
    payload = event.payload
    if event.kind == "user_message":
        return f"you> {payload['text']}"
    if event.kind == "agent_message":
        return f"[{event.agent}] {payload['text']}"
    if event.kind == "delegation":
        return f"[{event.agent}] -> {payload['specialist']}: {payload['task']}"
    if event.kind == "tool_call":
        args = json.dumps(payload["arguments"], sort_keys=True)
        return f"[{event.agent}] tool {payload['tool']} {args}"
    if event.kind == "tool_result":
        body = payload["text"] if payload["ok"] else f"ERROR: {payload['error']}"
        refs = [a["reference"] for a in payload["attachments"]]
        if refs:
            body = f"{body}\n  attachments: {', '.join(refs)}" if body else (
                f"attachments: {', '.join(refs)}"
            )
        return f"[tool {payload['tool']}] {body}"
    if event.kind == "evaluation":
        line = (
            f"[evaluation] {payload['evaluation_type']} "
            f"reward {payload['reward']:g} -> {payload['decision']}"
        )
        if payload.get("caption"):
            line += f"\n  caption: {payload['caption']}"
        if payload.get("reflection"):
            line += f"\n  reflection: {payload['reflection']}"
        if payload.get("report"):
            line += f"\n  report: {payload['report']}"
        return line
    if event.kind == "figure_standin":
        return f"[figure] {payload['reference']}: {payload['caption']}"
    if event.kind == "budget":
        return (
            f"[budget] {payload['note']} (remaining {payload['remaining']}, "
            f"extensions {payload['extensions_granted']})"
        )
    if event.kind == "error":
        return f"[error] {payload['message']}"
    return f"answer> {payload['text']}"


@click.group()
def main():
    """Research-assistant sessions from the terminal."""


@main.command()
@click.option("--provider", "provider_kind", type=click.Choice(["scripted", "live"]),
              default="scripted", show_default=True,
              help="Replay a response script or call a live endpoint.")
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON-lines response script (scripted provider).")
@click.option("--budget", type=int, default=20, show_default=True,
              help="Initial step budget per task.")
def chat(provider_kind: str, script_path, budget: int):
    """Start an interactive session; type 'exit' to leave."""
    settings = get_settings()
    if provider_kind == "scripted":
        if script_path is None:
            raise click.UsageError("--provider scripted requires --script FILE")
        provider = ScriptedProvider.from_jsonl(script_path)
        sandbox = None  # deterministic stub runtimes
    else:
        if settings.provider_endpoint is None:
            raise click.UsageError("--provider live requires PROVIDER_ENDPOINT to be set")
        provider = LiveProvider()
        sandbox = Sandbox(
            subprocess_backends(Path(settings.artifact_dir) / "sandbox")
        )
    lake = DataLake.load_fixture(
        settings.data_lake_path, artifact_dir=Path(settings.artifact_dir) / "lake"
    )
    engine = Engine(
        provider,
        lake=lake,
        sandbox=sandbox,
        artifact_dir=settings.artifact_dir,
        initial_budget=budget,
    )
    service = SessionService(engine, settings.session_dir)
    session = service.create_session()
    click.echo(f"session {session.session_id} (logs under {settings.session_dir})")

    while True:
        try:
            text = click.prompt("you", prompt_suffix="> ")
        except (EOFError, click.Abort):
            break
        if text.strip().lower() in ("exit", "quit"):
            break
        for event in service.stream_turn(session.session_id, text):
            if event.kind == "user_message":
                continue
            click.echo(format_event(event))
    click.echo(f"bye; replay with: copilot replay {session.session_id}")


@main.command()
@click.argument("session_id")
def replay(session_id: str):
    """Print the stored transcript of a session, event by event."""
    settings = get_settings()
    path = Path(settings.session_dir) / f"{session_id}.jsonl"
    if not path.exists():
        raise click.ClickException(f"no session log at {path}")
    try:
        events = load_events(path)
    except LogCorruptionError as exc:
        raise click.ClickException(str(exc))
    for event in events:
        click.echo(f"{event.seq:3d} {format_event(event)}")


@main.group()
def fixtures():
    """Operations on the packaged fixtures."""


@fixtures.command()
def verify():
    """Re-run the packaged acceptance fixtures and report pass/fail."""
    import tempfile

    failures = 0

    def check(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        mark = "ok" if ok else "FAIL"
        suffix = f" ({detail})" if detail and not ok else ""
        click.echo(f"{mark:4s} {name}{suffix}")
        if not ok:
            failures += 1

    from .evaluation import GateDecision, gate
    from .metrics import disruption_from_counts

    check("gate(0.85) continues", gate(0.85) is GateDecision.CONTINUE)
    check("gate(0.75) adjusts", gate(0.75) is GateDecision.ADJUST)
    check("gate(0.4) backtracks", gate(0.4) is GateDecision.BACKTRACK)

    rows = [
        ((95, 15, 55), 0.484848),
        ((53, 7, 30), 0.511111),
        ((8, 0, 22), 0.266667),
        ((54, 36, 83), 0.104046),
    ]
    for (ni, nj, nk), expected in rows:
        value = disruption_from_counts(ni, nj, nk).score
        check(
            f"disruption({ni},{nj},{nk}) = {expected}",
            abs(value - expected) <= 1e-6,
            f"got {value:.6f}",
        )

    golden = CASE1_GOLDEN_KINDS.read_text(encoding="utf-8").split()
    runs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as workdir:
            session, result = run_case1(Path(workdir) / "artifacts")
            runs.append(session.log.events)
    check(
        "case study replay matches the golden event sequence",
        [e.kind for e in runs[0]] == golden,
    )

    def stripped(events):
        return [json.dumps({**e.to_dict(), "timestamp": None}, sort_keys=True)
                for e in events]

    check(
        "two case study replays are byte-identical (timestamps excluded)",
        stripped(runs[0]) == stripped(runs[1]),
    )

    if failures:
        raise SystemExit(1)
    click.echo("all fixtures verified")


if __name__ == "__main__":
    sys.exit(main())
