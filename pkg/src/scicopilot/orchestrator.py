"""Agent state machines: the coordinator loop and specialist task loops.

A session runs one coordinating agent (the research manager) that answers
the user directly or hands work to role-scoped specialists. Specialists
loop over tool calls under a step budget; every tool call and every figure
is scored by the evaluator, and the resulting reward gates what happens
next: continue unchanged, adjust with an injected reflection, or backtrack
by truncating the working transcript to just before the gated action.

Context memory is deliberately narrow. A specialist only ever sees its own
system prompt, its task text, and its own working transcript. The manager
sees user turns, its own responses, and completed task records rendered
with specialist thinking removed and figures replaced by their textual
stand-ins. Raw image bytes reach the provider only inside visual-evaluation
calls; everywhere else a figure is text.

Every observable action is appended to the session's event log in causal
order, which makes scripted sessions replayable byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .corpus import Corpus
from .evaluation import (
    GateDecision,
    TaskEvaluation,
    evaluate_task,
    evaluate_tool_call,
    evaluate_visual,
    gate,
)
from .events import EventLog, SessionEvent, utc_now
from .lake import DataLake
from .prompts import load_prompt
from .providers import ChatMessage, GatewayError, ProtocolError, ToolCallRequest
from .sandbox import Sandbox, stub_backends
from .tags import SegmentKind, extract_count, first_of, parse_segments, serialize_segments
from .tools import (
    Attachment,
    ToolRegistry,
    ToolResult,
    database_tools,
    delegation_tools,
    failed,
    literature_tools,
    sandbox_tools,
)

MANAGER_ROLE = "research_manager"

SPECIALIST_ROLES = (
    "literature_specialist",
    "database_specialist",
    "analytics_specialist",
)

#: Prompt asset shipped for each role.
_PROMPT_ASSETS = {
    MANAGER_ROLE: "manager",
    "literature_specialist": "literature",
    "database_specialist": "database",
    "analytics_specialist": "analytics",
}

#: Delegations allowed within one user turn.
MAX_DELEGATIONS = 8

#: Backtracks allowed within one specialist task.
MAX_BACKTRACKS = 3

#: Steps added per granted budget extension.
EXTENSION_STEPS = 10

#: Extensions grantable per task.
MAX_EXTENSIONS = 2

#: No budget may ever exceed this many total steps.
HARD_STEP_CAP = 40

#: Literal marker an agent emits to ask for more steps.
EXTENSION_MARKER = "<request_steps>"


class OrchestrationError(Exception):
    """Base class for control-loop failures."""


class SessionBusyError(OrchestrationError):
    """A second turn was started while one is still running."""


class DelegationCapError(OrchestrationError):
    """A single user turn tried to delegate more than MAX_DELEGATIONS tasks."""


@dataclass(frozen=True)
class AgentConfig:
    role: str
    system_prompt: str
    toolset: ToolRegistry
    initial_budget: int = 20

    def __post_init__(self):
        if self.initial_budget <= 0:
            raise ValueError("initial budget must be positive")


@dataclass
class StepBudget:
    """Remaining step allowance for one agent task."""

    initial: int = 20
    remaining: int = -1
    extensions_granted: int = 0

    def __post_init__(self):
        if self.initial <= 0:
            raise ValueError("initial budget must be positive")
        if self.remaining < 0:
            self.remaining = self.initial

    @property
    def allowance(self) -> int:
        return self.initial + EXTENSION_STEPS * self.extensions_granted


@dataclass(frozen=True)
class BudgetNote:
    """A noteworthy budget transition, destined for a budget event."""

    note: str
    remaining: int
    extensions_granted: int
    agent_count: Optional[int] = None


def account_step(budget: StepBudget, segments) -> list[BudgetNote]:
    """Charge one response against ``budget`` and report notable transitions.

    A response costs one step per <step> segment, with a floor of one so
    that every provider round makes progress toward termination. The
    literal extension marker grants EXTENSION_STEPS more, at most
    MAX_EXTENSIONS times and never past HARD_STEP_CAP. When the agent's
    own <count> disagrees with the ledger, the ledger wins and the
    discrepancy is reported.
    """
    notes: list[BudgetNote] = []
    if any(EXTENSION_MARKER in seg.body for seg in segments):
        grantable = (
            budget.extensions_granted < MAX_EXTENSIONS
            and budget.allowance + EXTENSION_STEPS <= HARD_STEP_CAP
        )
        if grantable:
            budget.extensions_granted += 1
            budget.remaining += EXTENSION_STEPS
            notes.append(
                BudgetNote("extension_granted", budget.remaining, budget.extensions_granted)
            )
        else:
            notes.append(
                BudgetNote("extension_denied", budget.remaining, budget.extensions_granted)
            )
    steps = sum(1 for seg in segments if seg.kind is SegmentKind.STEP)
    budget.remaining = max(0, budget.remaining - max(1, steps))
    agent_count = extract_count(segments)
    if agent_count is not None and agent_count != budget.remaining:
        notes.append(
            BudgetNote(
                "count_mismatch",
                budget.remaining,
                budget.extensions_granted,
                agent_count=agent_count,
            )
        )
    return notes


# -- transcript entries --------------------------------------------------------


@dataclass(frozen=True)
class UserEntry:
    text: str


@dataclass(frozen=True)
class AssistantEntry:
    text: str
    tool_calls: tuple[ToolCallRequest, ...] = ()


@dataclass(frozen=True)
class ToolResultEntry:
    call_id: str
    tool_name: str
    result: ToolResult
    #: Stable artifact names for the result's image attachments, in order.
    figure_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvaluationEntry:
    """Outcome of a tool or visual evaluation, kept for audit and rendering."""

    target: str
    kind: str
    reward: float
    caption: Optional[str] = None
    reflection: Optional[str] = None


@dataclass(frozen=True)
class GateNote:
    """Reflection text injected by an adjust or backtrack decision."""

    call_id: str
    text: str


@dataclass(frozen=True)
class FigureStandIn:
    """The text that replaces a figure everywhere after its visual review."""

    reference: str
    caption: str
    summary: str

    def render(self) -> str:
        return f"[figure {self.reference}] {self.caption} ({self.summary})"


@dataclass(frozen=True)
class TaskFailure:
    reason: str


@dataclass
class TaskRecord:
    """One delegated task: its text, working transcript, and outcome.

    ``entries`` is the specialist's working transcript and is the thing
    gate decisions mutate; it freezes when the outcome is sealed. The
    session event log separately keeps the full append-only history.
    """

    task_id: str
    role: str
    task: str
    entries: Union[list, tuple] = field(default_factory=list)
    outcome: Optional[Union[TaskEvaluation, TaskFailure]] = None

    def seal(self, outcome: Union[TaskEvaluation, TaskFailure]) -> None:
        if self.outcome is not None:
            raise RuntimeError(f"task record {self.task_id} is already sealed")
        self.outcome = outcome
        self.entries = tuple(self.entries)


@dataclass(frozen=True)
class TurnResult:
    answer: Optional[str]
    events: tuple[SessionEvent, ...]


class Session:
    """Mutable conversation state for one user-facing session."""

    def __init__(
        self,
        session_id: str,
        provider,
        configs: dict,
        artifact_dir: Path,
        log: EventLog,
    ):
        self.session_id = session_id
        self.provider = provider
        self.configs = configs
        self.artifact_dir = Path(artifact_dir)
        self.artifact_dir.mkdir(parents=True, exist_ok=True)
        self.log = log
        self.manager_entries: list = []
        self.records: list[TaskRecord] = []
        self.standins: dict[str, FigureStandIn] = {}
        self.status = "idle"
        self.created_at = utc_now()
        self.title = ""
        self._task_counter = 0

    def new_task_id(self) -> str:
        self._task_counter += 1
        return f"task_{self._task_counter}"


class Engine:
    """Builds runnable sessions over one provider and shared data bindings.

    The lake and corpus are shared across sessions (they are read-only);
    sandbox sessions and tool registries are created fresh per session so
    interpreter state never leaks between conversations. Providers that
    support ``fork()`` get an independent cursor per session.
    """

    def __init__(
        self,
        provider,
        lake: Optional[DataLake] = None,
        corpus: Optional[Corpus] = None,
        sandbox: Optional[Sandbox] = None,
        artifact_dir=None,
        initial_budget: int = 20,
        clock=None,
    ):
        self.provider = provider
        self.lake = lake
        self.corpus = corpus
        self.sandbox = sandbox or Sandbox(stub_backends())
        self.artifact_dir = Path(artifact_dir or "artifacts")
        self.initial_budget = initial_budget
        self._clock = clock

    def new_session(self, session_id: str, writer=None) -> Session:
        provider = self.provider.fork() if hasattr(self.provider, "fork") else self.provider
        log = EventLog(clock=self._clock, writer=writer)
        configs = self._build_configs(provider)
        return Session(session_id, provider, configs, self.artifact_dir, log)

    def restore_session(self, session_id: str, events, writer=None) -> Session:
        """Rebuild a session from its persisted events, ready for new turns."""
        provider = self.provider.fork() if hasattr(self.provider, "fork") else self.provider
        log = EventLog.from_events(events, clock=self._clock, writer=writer)
        session = Session(session_id, provider, self._build_configs(provider),
                          self.artifact_dir, log)
        replay_events(session, events)
        if events:
            session.created_at = events[0].timestamp
        return session

    def _build_configs(self, provider) -> dict:
        def _undelegated(task: str) -> ToolResult:
            return failed("delegations run through the session loop")

        toolsets = {
            MANAGER_ROLE: delegation_tools({name: _undelegated for name in SPECIALIST_ROLES}),
            "literature_specialist": (
                literature_tools(self.corpus, provider) if self.corpus else ToolRegistry()
            ),
            "database_specialist": (
                database_tools(self.lake) if self.lake else ToolRegistry()
            ),
            "analytics_specialist": sandbox_tools(
                {runtime: self.sandbox.open(runtime) for runtime in self.sandbox.runtimes}
            ),
        }
        return {
            role: AgentConfig(
                role=role,
                system_prompt=load_prompt(_PROMPT_ASSETS[role]),
                toolset=toolset,
                initial_budget=self.initial_budget,
            )
            for role, toolset in toolsets.items()
        }


# -- context assembly ----------------------------------------------------------


def _redact_thinking(text: str) -> str:
    segments = [s for s in parse_segments(text) if s.kind is not SegmentKind.THINKING]
    return serialize_segments(segments)


def _call_line(call: ToolCallRequest) -> str:
    return (
        f"[tool_call {call.id}: {call.tool_name} "
        f"{json.dumps(call.arguments, sort_keys=True)}]"
    )


def _assistant_text(entry: AssistantEntry, redact: bool) -> str:
    text = _redact_thinking(entry.text) if redact else entry.text
    for call in entry.tool_calls:
        line = _call_line(call)
        text = f"{text}\n{line}" if text else line
    return text


def _result_body(entry: ToolResultEntry, standins: dict) -> str:
    result = entry.result
    if result.ok:
        body = result.text
    elif result.text:
        body = f"{result.text}\nERROR: {result.error}"
    else:
        body = f"ERROR: {result.error}"
    images = [a for a in result.attachments if a.kind == "image"]
    for ref in entry.figure_refs[: len(images)]:
        standin = standins.get(ref)
        line = standin.render() if standin else f"[figure {ref}]"
        body = f"{body}\n{line}" if body else line
    return body


def render_task_for_manager(record: TaskRecord, standins: dict) -> str:
    """Render a completed task the way the coordinator is allowed to see it.

    Specialist thinking is removed, figures appear as stand-in text, and
    the final report (when the task was evaluated) is included verbatim.
    """
    lines: list[str] = []
    for entry in record.entries:
        if isinstance(entry, AssistantEntry):
            lines.append(f"{record.role}: {_assistant_text(entry, redact=True)}")
        elif isinstance(entry, ToolResultEntry):
            lines.append(f"tool {entry.tool_name}: {_result_body(entry, standins)}")
        elif isinstance(entry, EvaluationEntry):
            line = f"evaluation ({entry.kind}, reward {entry.reward:g})"
            if entry.caption:
                line += f": {entry.caption}"
            if entry.reflection:
                line += f" [reflection: {entry.reflection}]"
            lines.append(line)
        elif isinstance(entry, GateNote):
            lines.append(f"evaluation feedback: {entry.text}")
    if isinstance(record.outcome, TaskEvaluation):
        lines.append(
            f"task report (reward {record.outcome.reward:g}): {record.outcome.report}"
        )
    elif isinstance(record.outcome, TaskFailure):
        lines.append(f"task failed: {record.outcome.reason}")
    else:
        lines.append("task incomplete")
    return "\n".join(lines)


def assemble_context(
    session: Session, role: str, record: Optional[TaskRecord] = None
) -> list[ChatMessage]:
    """Build the exact message list an agent may see.

    Specialists see their system prompt, their task, and their own working
    transcript; nothing from any other task ever enters. The manager sees
    its own history plus completed tasks rendered by
    ``render_task_for_manager``. Image bytes appear in neither.
    """
    config = session.configs[role]
    if role == MANAGER_ROLE:
        messages = [ChatMessage.text("system", config.system_prompt)]
        for entry in session.manager_entries:
            if isinstance(entry, UserEntry):
                messages.append(ChatMessage.text("user", entry.text))
            elif isinstance(entry, AssistantEntry):
                messages.append(
                    ChatMessage.text("assistant", _assistant_text(entry, redact=False))
                )
            else:  # DelegationEntry
                messages.append(
                    ChatMessage.text(
                        "tool",
                        render_task_for_manager(entry.record, session.standins),
                        tool_call_id=entry.call_id,
                    )
                )
        return messages

    if record is None:
        raise ValueError(f"assembling a {role} context requires a task record")
    messages = [
        ChatMessage.text("system", config.system_prompt),
        ChatMessage.text("user", record.task),
    ]
    for entry in record.entries:
        if isinstance(entry, AssistantEntry):
            messages.append(
                ChatMessage.text("assistant", _assistant_text(entry, redact=False))
            )
        elif isinstance(entry, ToolResultEntry):
            messages.append(
                ChatMessage.text(
                    "tool",
                    _result_body(entry, session.standins),
                    tool_call_id=entry.call_id,
                )
            )
        elif isinstance(entry, GateNote):
            messages.append(
                ChatMessage.text(
                    "tool",
                    f"Evaluation feedback: {entry.text}",
                    tool_call_id=entry.call_id,
                )
            )
        # EvaluationEntry stays out: specialists hear about evaluations only
        # through injected gate feedback.
    return messages


@dataclass(frozen=True)
class DelegationEntry:
    call_id: str
    record: TaskRecord


# -- gate application ----------------------------------------------------------


def _guidance(reward: float, reflection: Optional[str], decision: GateDecision) -> str:
    if reflection:
        return reflection
    if decision is GateDecision.ADJUST:
        return f"Evaluation reward {reward:g}: consider minor adjustments before continuing."
    return f"Evaluation reward {reward:g}: that action was rolled back; try a different approach."


def apply_gate(
    record: TaskRecord, decision: GateDecision, call_id: str, guidance: str
) -> None:
    """Mutate the working transcript according to a gate decision.

    Continue leaves the transcript alone. Adjust appends the guidance so
    the next turn sees it. Backtrack removes the gated action (the
    assistant turn that made the call and everything after it) and then
    appends the guidance in its place.
    """
    if decision is GateDecision.CONTINUE:
        return
    if decision is GateDecision.BACKTRACK:
        for index, entry in enumerate(record.entries):
            if isinstance(entry, AssistantEntry) and any(
                call.id == call_id for call in entry.tool_calls
            ):
                del record.entries[index:]
                break
    record.entries.append(GateNote(call_id, guidance))


# -- event helpers -------------------------------------------------------------


def _log_budget(session: Session, agent: str, task_id: Optional[str], note: BudgetNote) -> None:
    session.log.append(
        "budget",
        agent,
        {
            "task_id": task_id,
            "note": note.note,
            "remaining": note.remaining,
            "extensions_granted": note.extensions_granted,
            "agent_count": note.agent_count,
        },
    )


def _call_payload(tool_calls: Sequence[ToolCallRequest]) -> list[dict]:
    return [
        {"id": call.id, "tool": call.tool_name, "arguments": dict(call.arguments)}
        for call in tool_calls
    ]


def _attachment_payload(result: ToolResult, figure_refs: Sequence[str]) -> list[dict]:
    payload = []
    refs = list(figure_refs)
    for att in result.attachments:
        if att.kind == "image":
            reference = refs.pop(0) if refs else att.reference
        else:
            reference = att.reference
        payload.append(
            {"kind": att.kind, "reference": reference, "media_type": att.media_type}
        )
    return payload


def _persist_figures(
    session: Session, record: TaskRecord, call_id: str, result: ToolResult
) -> tuple[str, ...]:
    """Write image attachments to the artifact directory under stable names."""
    refs = []
    for att in result.attachments:
        if att.kind != "image":
            continue
        ref = f"{session.session_id}-{record.task_id}-{call_id}-{Path(att.reference).name}"
        (session.artifact_dir / ref).write_bytes(att.data)
        refs.append(ref)
    return tuple(refs)


def _visual_summary(reward: float, reflection: Optional[str]) -> str:
    summary = f"visual evaluation reward {reward:g}"
    if reflection:
        summary += f"; reflection: {reflection}"
    return summary


# -- the specialist loop -------------------------------------------------------


def delegate_task(
    session: Session, role: str, task_text: str, task_id: Optional[str] = None
) -> TaskRecord:
    """Run one specialist task to completion and return its sealed record.

    The loop ends when the specialist replies without tool calls, at which
    point the whole workflow is evaluated and the record sealed with a
    TaskEvaluation. Budget exhaustion or too many backtracks seal it with
    a TaskFailure instead.
    """
    if role == MANAGER_ROLE:
        raise ValueError("the coordinator role cannot be delegated to")
    config = session.configs.get(role)
    if config is None:
        raise ValueError(f"unknown specialist role {role!r}")

    record = TaskRecord(task_id or session.new_task_id(), role, task_text)
    session.records.append(record)
    budget = StepBudget(initial=config.initial_budget)
    backtracks = 0

    while True:
        if budget.remaining <= 0:
            _log_budget(
                session, role, record.task_id,
                BudgetNote("exhausted", 0, budget.extensions_granted),
            )
            record.seal(TaskFailure("step budget exhausted"))
            return record

        response = session.provider.complete(
            assemble_context(session, role, record), tools=config.toolset.schemas()
        )
        record.entries.append(AssistantEntry(response.text, tuple(response.tool_calls)))
        session.log.append(
            "agent_message",
            role,
            {
                "task_id": record.task_id,
                "text": response.text,
                "tool_calls": _call_payload(response.tool_calls),
            },
        )
        for note in account_step(budget, parse_segments(response.text)):
            _log_budget(session, role, record.task_id, note)

        if not response.tool_calls:
            break

        rolled_back = False
        for call in response.tool_calls:
            session.log.append(
                "tool_call",
                role,
                {
                    "task_id": record.task_id,
                    "call_id": call.id,
                    "tool": call.tool_name,
                    "arguments": call.arguments,
                },
            )
            result = config.toolset.dispatch(call)
            figure_refs = _persist_figures(session, record, call.id, result)
            record.entries.append(
                ToolResultEntry(call.id, call.tool_name, result, figure_refs)
            )
            session.log.append(
                "tool_result",
                role,
                {
                    "task_id": record.task_id,
                    "call_id": call.id,
                    "tool": call.tool_name,
                    "ok": result.ok,
                    "text": result.text,
                    "error": result.error,
                    "attachments": _attachment_payload(result, figure_refs),
                },
            )

            attempts: list = []
            evaluation = evaluate_tool_call(
                session.provider,
                assemble_context(session, role, record),
                observer=attempts.append,
            )
            decision = gate(evaluation.reward)
            record.entries.append(
                EvaluationEntry(call.id, "tool", evaluation.reward,
                                reflection=evaluation.reflection)
            )
            session.log.append(
                "evaluation",
                "evaluation_specialist",
                {
                    "task_id": record.task_id,
                    "evaluation_type": "tool",
                    "target": call.id,
                    "reward": evaluation.reward,
                    "reflection": evaluation.reflection,
                    "attempts": len(attempts),
                    "decision": decision.value,
                },
            )
            if decision is not GateDecision.CONTINUE:
                if decision is GateDecision.BACKTRACK:
                    backtracks += 1
                    if backtracks > MAX_BACKTRACKS:
                        session.log.append(
                            "error",
                            "system",
                            {
                                "task_id": record.task_id,
                                "message": f"backtrack limit exceeded ({MAX_BACKTRACKS} per task)",
                            },
                        )
                        record.seal(TaskFailure("backtrack limit exceeded"))
                        return record
                apply_gate(
                    record, decision, call.id,
                    _guidance(evaluation.reward, evaluation.reflection, decision),
                )
                if decision is GateDecision.BACKTRACK:
                    rolled_back = True
                    break

            # Each figure in the result gets its own visual review, in
            # attachment order; the reviewed image then exists in later
            # contexts only as stand-in text.
            images = [a for a in result.attachments if a.kind == "image"]
            for att, ref in zip(images, figure_refs):
                attempts = []
                visual = evaluate_visual(
                    session.provider,
                    att,
                    assemble_context(session, role, record),
                    observer=attempts.append,
                )
                standin = FigureStandIn(
                    ref, visual.caption, _visual_summary(visual.reward, visual.reflection)
                )
                session.standins[ref] = standin
                record.entries.append(
                    EvaluationEntry(ref, "visual", visual.reward,
                                    caption=visual.caption, reflection=visual.reflection)
                )
                vdecision = gate(visual.reward)
                session.log.append(
                    "evaluation",
                    "evaluation_specialist",
                    {
                        "task_id": record.task_id,
                        "evaluation_type": "visual",
                        "target": ref,
                        "call_id": call.id,
                        "caption": visual.caption,
                        "reward": visual.reward,
                        "reflection": visual.reflection,
                        "attempts": len(attempts),
                        "decision": vdecision.value,
                    },
                )
                session.log.append(
                    "figure_standin",
                    "evaluation_specialist",
                    {
                        "task_id": record.task_id,
                        "call_id": call.id,
                        "reference": ref,
                        "caption": standin.caption,
                        "summary": standin.summary,
                    },
                )
                if vdecision is GateDecision.CONTINUE:
                    continue
                if vdecision is GateDecision.BACKTRACK:
                    backtracks += 1
                    if backtracks > MAX_BACKTRACKS:
                        session.log.append(
                            "error",
                            "system",
                            {
                                "task_id": record.task_id,
                                "message": f"backtrack limit exceeded ({MAX_BACKTRACKS} per task)",
                            },
                        )
                        record.seal(TaskFailure("backtrack limit exceeded"))
                        return record
                apply_gate(
                    record, vdecision, call.id,
                    _guidance(visual.reward, visual.reflection, vdecision),
                )
                if vdecision is GateDecision.BACKTRACK:
                    rolled_back = True
                    break
            if rolled_back:
                break

    attempts = []
    outcome = evaluate_task(
        session.provider,
        assemble_context(session, role, record),
        observer=attempts.append,
    )
    session.log.append(
        "evaluation",
        "evaluation_specialist",
        {
            "task_id": record.task_id,
            "evaluation_type": "task",
            "target": None,
            "report": outcome.report,
            "reward": outcome.reward,
            "attempts": len(attempts),
            "decision": gate(outcome.reward).value,
        },
    )
    record.seal(outcome)
    return record


# -- the manager loop ----------------------------------------------------------


def _delegation_task_text(call: ToolCallRequest) -> str:
    task = call.arguments.get("task")
    if not isinstance(task, str) or not task.strip():
        raise ProtocolError(
            f"delegation {call.tool_name!r} requires a non-empty 'task' string"
        )
    extras = sorted(set(call.arguments) - {"task"})
    if extras:
        raise ProtocolError(f"delegation {call.tool_name!r} got unexpected arguments {extras}")
    return task


def run_user_turn(session: Session, user_text: str) -> TurnResult:
    """Process one user message to an answer (or a recorded failure).

    The manager loop runs until it emits an <answer> segment or a limit
    trips. Provider and protocol errors do not escape: they become error
    events and the session stays usable for the next turn.
    """
    if session.status == "running":
        raise SessionBusyError("a turn is already running for this session")
    session.status = "running"
    start = len(session.log)
    answer: Optional[str] = None
    try:
        session.log.append("user_message", "user", {"text": user_text})
        session.manager_entries.append(UserEntry(user_text))
        config = session.configs[MANAGER_ROLE]
        budget = StepBudget(initial=config.initial_budget)
        delegations = 0

        while True:
            if budget.remaining <= 0:
                _log_budget(
                    session, MANAGER_ROLE, None,
                    BudgetNote("exhausted", 0, budget.extensions_granted),
                )
                session.log.append(
                    "error",
                    "system",
                    {"task_id": None, "message": "step budget exhausted before an answer"},
                )
                break

            response = session.provider.complete(
                assemble_context(session, MANAGER_ROLE),
                tools=config.toolset.schemas(),
            )
            session.manager_entries.append(
                AssistantEntry(response.text, tuple(response.tool_calls))
            )
            session.log.append(
                "agent_message",
                MANAGER_ROLE,
                {
                    "task_id": None,
                    "text": response.text,
                    "tool_calls": _call_payload(response.tool_calls),
                },
            )
            for note in account_step(budget, parse_segments(response.text)):
                _log_budget(session, MANAGER_ROLE, None, note)

            if response.tool_calls:
                for call in response.tool_calls:
                    delegations += 1
                    if delegations > MAX_DELEGATIONS:
                        raise DelegationCapError(
                            f"delegation cap exceeded ({MAX_DELEGATIONS} per turn)"
                        )
                    task_text = _delegation_task_text(call)
                    task_id = session.new_task_id()
                    session.log.append(
                        "delegation",
                        MANAGER_ROLE,
                        {
                            "task_id": task_id,
                            "call_id": call.id,
                            "specialist": call.tool_name,
                            "task": task_text,
                        },
                    )
                    record = delegate_task(session, call.tool_name, task_text, task_id)
                    session.manager_entries.append(DelegationEntry(call.id, record))
                continue

            answer_segment = first_of(parse_segments(response.text), SegmentKind.ANSWER)
            if answer_segment is not None:
                answer = answer_segment.body.strip()
                session.log.append(
                    "final_answer", MANAGER_ROLE, {"text": answer}
                )
                break
    except (GatewayError, OrchestrationError) as exc:
        session.log.append(
            "error",
            "system",
            {"task_id": None, "message": f"{type(exc).__name__}: {exc}"},
        )
    finally:
        session.status = "idle"
    return TurnResult(answer=answer, events=session.log.events[start:])


# -- replaying persisted sessions ------------------------------------------------


def _rebuilt_attachments(session: Session, items: Sequence[dict]) -> tuple[Attachment, ...]:
    attachments = []
    for item in items:
        if item["kind"] == "image":
            path = session.artifact_dir / item["reference"]
            data = path.read_bytes() if path.exists() else b"\x00"
            attachments.append(
                Attachment(kind="image", reference=item["reference"],
                           media_type=item["media_type"], data=data)
            )
        else:
            attachments.append(
                Attachment(kind="file", reference=item["reference"],
                           media_type=item["media_type"])
            )
    return tuple(attachments)


def replay_events(session: Session, events: Sequence[SessionEvent]) -> None:
    """Rebuild session state from a persisted event log.

    After replay, ``assemble_context`` returns exactly what the live run
    saw: gate decisions are re-applied (including backtrack truncation),
    figures come back as stand-ins, and sealed outcomes are restored from
    their evaluation, budget, or error events.
    """
    current: Optional[TaskRecord] = None
    for event in events:
        payload = event.payload
        if event.kind == "user_message":
            session.manager_entries.append(UserEntry(payload["text"]))
            if not session.title:
                session.title = payload["text"][:80]
        elif event.kind == "agent_message":
            calls = tuple(
                ToolCallRequest(item["id"], item["tool"], dict(item["arguments"]))
                for item in payload.get("tool_calls", ())
            )
            entry = AssistantEntry(payload["text"], calls)
            if payload.get("task_id") is None:
                session.manager_entries.append(entry)
            elif current is not None:
                current.entries.append(entry)
        elif event.kind == "delegation":
            current = TaskRecord(payload["task_id"], payload["specialist"], payload["task"])
            session.records.append(current)
            session.manager_entries.append(DelegationEntry(payload["call_id"], current))
            suffix = payload["task_id"].rsplit("_", 1)[-1]
            if suffix.isdigit():
                session._task_counter = max(session._task_counter, int(suffix))
        elif event.kind == "tool_result" and current is not None:
            result_kwargs = {
                "text": payload["text"],
                "attachments": _rebuilt_attachments(session, payload["attachments"]),
            }
            if not payload["ok"]:
                result_kwargs.update(ok=False, error=payload["error"])
            figure_refs = tuple(
                item["reference"] for item in payload["attachments"]
                if item["kind"] == "image"
            )
            current.entries.append(
                ToolResultEntry(payload["call_id"], payload["tool"],
                                ToolResult(**result_kwargs), figure_refs)
            )
        elif event.kind == "evaluation" and current is not None:
            etype = payload["evaluation_type"]
            if etype == "task":
                if current.outcome is None:
                    current.seal(
                        TaskEvaluation(report=payload["report"], reward=payload["reward"])
                    )
                continue
            if etype == "tool":
                entry = EvaluationEntry(payload["target"], "tool", payload["reward"],
                                        reflection=payload["reflection"])
                gated_call = payload["target"]
            else:
                entry = EvaluationEntry(payload["target"], "visual", payload["reward"],
                                        caption=payload["caption"],
                                        reflection=payload["reflection"])
                gated_call = payload["call_id"]
            current.entries.append(entry)
            decision = GateDecision(payload["decision"])
            if decision is not GateDecision.CONTINUE:
                apply_gate(
                    current, decision, gated_call,
                    _guidance(payload["reward"], payload["reflection"], decision),
                )
        elif event.kind == "figure_standin":
            session.standins[payload["reference"]] = FigureStandIn(
                payload["reference"], payload["caption"], payload["summary"]
            )
        elif event.kind == "budget":
            exhausted_task = payload.get("task_id") is not None and payload["note"] == "exhausted"
            if exhausted_task and current is not None and current.outcome is None:
                current.seal(TaskFailure("step budget exhausted"))
        elif event.kind == "error":
            task_error = payload.get("task_id") is not None
            if (
                task_error
                and current is not None
                and current.outcome is None
                and "backtrack limit exceeded" in payload.get("message", "")
            ):
                current.seal(TaskFailure("backtrack limit exceeded"))
