"""Reward-gated quality control: scoring tool calls, figures, and finished tasks.

The three assessments share one shape: send the transcript under review plus
a fixed meta-prompt through the provider, then parse the reply under a
restricted tag grammar. A reply that uses tags outside its grammar or omits
a required field is rejected and retried exactly once; a second bad reply
raises EvaluationProtocolError. Rewards are never silently defaulted: the
control loop gets either a model-authored score or an error.

``gate`` turns a reward into a control decision: continue at 0.8 and above,
adjust from 0.5 up to but excluding 0.8, backtrack below 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .prompts import load_prompt
from .providers import (
    ChatMessage,
    ContentPart,
    GenerationParams,
    ProtocolError,
    Provider,
)
from .tags import (
    RewardOutOfRangeError,
    SegmentKind,
    TaggedSegment,
    bodies_of,
    extract_reward,
    first_of,
    parse_segments,
)
from .tools import Attachment


class EvaluationProtocolError(ProtocolError):
    """An evaluator reply stayed malformed after its single retry."""


class GateDecision(str, Enum):
    """What the control loop does with a scored action."""

    CONTINUE = "continue"
    ADJUST = "adjust"
    BACKTRACK = "backtrack"


def gate(reward: float) -> GateDecision:
    """Map a reward in [0, 1] onto a GateDecision.

    The bands partition the interval: [0.8, 1] continues, [0.5, 0.8)
    adjusts, [0, 0.5) backtracks. Values outside [0, 1] (including NaN)
    raise RewardOutOfRangeError rather than silently picking a band.
    """
    if not 0.0 <= reward <= 1.0:
        raise RewardOutOfRangeError(reward)
    if reward >= 0.8:
        return GateDecision.CONTINUE
    if reward >= 0.5:
        return GateDecision.ADJUST
    return GateDecision.BACKTRACK


def _checked_reward(value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise RewardOutOfRangeError(value)
    return value


@dataclass(frozen=True)
class ToolEvaluation:
    """Score for a single tool call, with an optional improvement note."""

    reward: float
    reflection: Optional[str] = None

    def __post_init__(self):
        _checked_reward(self.reward)


@dataclass(frozen=True)
class VisualEvaluation:
    """Review of one generated figure.

    ``caption`` plus the reward become the figure's textual stand-in in
    later contexts. ``thinking`` is the reviewer's working notes and stays
    internal; it is never forwarded to other agents.
    """

    caption: str
    reward: float
    thinking: str = ""
    reflection: Optional[str] = None

    def __post_init__(self):
        _checked_reward(self.reward)
        if not self.caption.strip():
            raise ValueError("caption must be non-empty")


@dataclass(frozen=True)
class TaskEvaluation:
    """Workflow-level verdict on a completed specialist task."""

    report: str
    reward: float

    def __post_init__(self):
        _checked_reward(self.reward)
        if not self.report.strip():
            raise ValueError("report must be non-empty")


@dataclass(frozen=True)
class EvaluationAttempt:
    """One provider round inside an evaluation, surfaced for event logging.

    ``problem`` is None when the reply parsed cleanly; otherwise it names
    the grammar violation that forced a retry (or the final failure).
    """

    evaluator: str
    attempt: int
    response_text: str
    problem: Optional[str]


Observer = Callable[[EvaluationAttempt], None]

#: Evaluators run at temperature zero so reruns of a live session score
#: identically; scripted providers ignore the setting.
_EVAL_PARAMS = GenerationParams(temperature=0.0)

_TOOL_PROMPT = load_prompt("eval_tool")
_VISUAL_PROMPT = load_prompt("eval_visual")
_TASK_PROMPT = load_prompt("eval_task")

_TOOL_ALLOWED = frozenset({SegmentKind.REWARD, SegmentKind.REFLECTION})
_VISUAL_ALLOWED = frozenset({
    SegmentKind.THINKING,
    SegmentKind.CAPTION,
    SegmentKind.REWARD,
    SegmentKind.REFLECTION,
})
_TASK_ALLOWED = frozenset({
    SegmentKind.THINKING,
    SegmentKind.REPORT,
    SegmentKind.REWARD,
})


class _GrammarViolation(Exception):
    """Internal marker: the current reply must be rejected (and maybe retried)."""


def _check_grammar(
    segments: Sequence[TaggedSegment],
    allowed: frozenset,
    evaluator: str,
) -> None:
    """Reject any tag outside the evaluator's restriction.

    Prose between tags is formatting, not a grammar element, so it passes;
    the restriction constrains which tags may appear.
    """
    for seg in segments:
        if seg.kind is SegmentKind.PROSE:
            continue
        if seg.kind not in allowed:
            raise _GrammarViolation(
                f"<{seg.kind.value}> is outside the {evaluator} evaluation grammar"
            )


def _required_reward(segments: Sequence[TaggedSegment]) -> float:
    try:
        reward = extract_reward(segments)
    except RewardOutOfRangeError as exc:
        raise _GrammarViolation(str(exc)) from exc
    if reward is None:
        raise _GrammarViolation("response carries no valid <reward> tag")
    return reward


def _required_body(segments, kind: SegmentKind) -> str:
    seg = first_of(segments, kind)
    if seg is None or not seg.body.strip():
        raise _GrammarViolation(f"response carries no non-empty <{kind.value}> tag")
    return seg.body.strip()


def _optional_reflection(segments: Sequence[TaggedSegment]) -> Optional[str]:
    bodies = [b.strip() for b in bodies_of(segments, SegmentKind.REFLECTION)]
    merged = "\n".join(b for b in bodies if b)
    return merged or None


def _joined_thinking(segments: Sequence[TaggedSegment]) -> str:
    bodies = [b.strip() for b in bodies_of(segments, SegmentKind.THINKING)]
    return "\n".join(b for b in bodies if b)


def _with_closing(
    transcript: Sequence[ChatMessage], *parts: ContentPart
) -> list[ChatMessage]:
    """Append the evaluator's meta-prompt after the transcript under review.

    The meta-prompts speak of "the above", so they ride in a final user
    message rather than replacing the transcript's own system prompt.
    """
    return list(transcript) + [ChatMessage(role="user", parts=tuple(parts))]


def _run(
    provider: Provider,
    messages: list[ChatMessage],
    evaluator: str,
    parse: Callable[[list[TaggedSegment]], object],
    observer: Optional[Observer],
):
    problem = ""
    for attempt in (1, 2):
        response = provider.complete(messages, params=_EVAL_PARAMS)
        segments = parse_segments(response.text)
        try:
            result = parse(segments)
        except _GrammarViolation as violation:
            problem = str(violation)
            if observer is not None:
                observer(EvaluationAttempt(evaluator, attempt, response.text, problem))
            continue
        if observer is not None:
            observer(EvaluationAttempt(evaluator, attempt, response.text, None))
        return result
    raise EvaluationProtocolError(
        f"{evaluator} evaluation rejected after one retry: {problem}"
    )


def evaluate_tool_call(
    provider: Provider,
    transcript: Sequence[ChatMessage],
    observer: Optional[Observer] = None,
) -> ToolEvaluation:
    """Score the newest tool call in ``transcript``.

    The transcript must end with the tool result being judged. The reply
    grammar permits only <reward> and an optional <reflection>.
    """
    transcript = list(transcript)
    if not transcript:
        raise ValueError("tool evaluation requires a non-empty transcript")
    if transcript[-1].role != "tool":
        raise ValueError(
            "tool evaluation requires the transcript to end with a tool result"
        )
    messages = _with_closing(transcript, ContentPart.text(_TOOL_PROMPT))

    def parse(segments):
        _check_grammar(segments, _TOOL_ALLOWED, "tool")
        return ToolEvaluation(
            reward=_required_reward(segments),
            reflection=_optional_reflection(segments),
        )

    return _run(provider, messages, "tool", parse, observer)


def evaluate_visual(
    provider: Provider,
    image: Attachment,
    transcript: Sequence[ChatMessage],
    observer: Optional[Observer] = None,
) -> VisualEvaluation:
    """Review one generated figure against the transcript that produced it.

    The image rides in the closing user message next to the meta-prompt.
    The reply grammar permits <thinking>, <caption>, <reward>, and an
    optional <reflection>; the caption must be non-empty.
    """
    if image.kind != "image":
        raise ValueError("visual evaluation requires an image attachment")
    transcript = list(transcript)
    if not transcript:
        raise ValueError("visual evaluation requires a non-empty transcript")
    messages = _with_closing(
        transcript,
        ContentPart.image(image.media_type, image.data),
        ContentPart.text(_VISUAL_PROMPT),
    )

    def parse(segments):
        _check_grammar(segments, _VISUAL_ALLOWED, "visual")
        return VisualEvaluation(
            caption=_required_body(segments, SegmentKind.CAPTION),
            reward=_required_reward(segments),
            thinking=_joined_thinking(segments),
            reflection=_optional_reflection(segments),
        )

    return _run(provider, messages, "visual", parse, observer)


def evaluate_task(
    provider: Provider,
    transcript: Sequence[ChatMessage],
    observer: Optional[Observer] = None,
) -> TaskEvaluation:
    """Judge a completed specialist workflow as a whole.

    The reply grammar permits <thinking>, <report>, and <reward>; the
    report must be non-empty because it is forwarded to the coordinating
    agent as the task's outcome.
    """
    transcript = list(transcript)
    if not transcript:
        raise ValueError("task evaluation requires a non-empty transcript")
    messages = _with_closing(transcript, ContentPart.text(_TASK_PROMPT))

    def parse(segments):
        _check_grammar(segments, _TASK_ALLOWED, "task")
        return TaskEvaluation(
            report=_required_body(segments, SegmentKind.REPORT),
            reward=_required_reward(segments),
        )

    return _run(provider, messages, "task", parse, observer)
