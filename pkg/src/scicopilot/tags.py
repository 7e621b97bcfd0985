"""Reasoning-tag grammar shared by every agent in the system.

Agent responses are plain text sprinkled with a small set of XML-style tags:

    <thinking>...</thinking>  private reasoning
    <step>...</step>          one unit of work against the step budget
    <count>19</count>         agent's own view of the remaining budget
    <reflection>...</reflection>
    <reward>0.85</reward>     evaluator score in [0, 1]
    <answer>...</answer>      final deliverable of a turn
    <caption>...</caption>    textual stand-in for a figure
    <report>...</report>      task-level execution report

Parsing is total: anything that is not a well-formed known tag stays in the
output as a prose segment, byte-for-byte, so transcripts never lose content.
Tag names are case-sensitive and lowercase; an opening tag appearing inside
another tag's body is literal text (the grammar does not nest); a final tag
left unclosed by a truncated response is treated as closed at end-of-text.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

logger = logging.getLogger(__name__)


class SegmentKind(str, Enum):
    THINKING = "thinking"
    STEP = "step"
    COUNT = "count"
    REFLECTION = "reflection"
    REWARD = "reward"
    ANSWER = "answer"
    CAPTION = "caption"
    REPORT = "report"
    PROSE = "prose"


#: Kinds that appear as actual tags on the wire (everything except prose).
TAG_KINDS = tuple(k for k in SegmentKind if k is not SegmentKind.PROSE)

#: Kinds whose body carries a numeric control value.
NUMERIC_KINDS = (SegmentKind.REWARD, SegmentKind.COUNT)

_OPEN_RE = re.compile("<(%s)>" % "|".join(k.value for k in TAG_KINDS))

_COUNT_BODY_RE = re.compile(r"\s*\d+\s*\Z")


class RewardOutOfRangeError(ValueError):
    """A reward value fell outside [0, 1]."""

    def __init__(self, value: float):
        super().__init__(f"reward {value!r} is outside the valid range [0, 1]")
        self.value = value


@dataclass(frozen=True)
class TaggedSegment:
    """One parsed unit of an agent response.

    ``body`` is the raw inner text exactly as it appeared between the tags
    (or the raw span itself for prose), so serialization can reproduce the
    original bytes. ``numeric`` is derived from the body and present only
    for reward and count segments.
    """

    kind: SegmentKind
    body: str
    numeric: Optional[float] = None

    @classmethod
    def prose(cls, text: str) -> "TaggedSegment":
        return cls(SegmentKind.PROSE, text)

    @classmethod
    def tagged(cls, kind: SegmentKind, body: str) -> "TaggedSegment":
        """Build a tagged segment, deriving the numeric for reward/count.

        Raises ValueError when a reward/count body does not hold a number;
        parsing never calls this on malformed bodies, so the error is only
        reachable from programmatic construction.
        """
        if kind is SegmentKind.PROSE:
            return cls.prose(body)
        numeric = None
        if kind is SegmentKind.COUNT:
            if not _COUNT_BODY_RE.match(body):
                raise ValueError(f"count body {body!r} is not a non-negative integer")
            numeric = float(int(body.strip()))
        elif kind is SegmentKind.REWARD:
            numeric = float(body.strip())  # raises ValueError on junk
        return cls(kind, body, numeric)

    @classmethod
    def reward(cls, value: float) -> "TaggedSegment":
        return cls(SegmentKind.REWARD, repr(float(value)), float(value))

    @classmethod
    def count(cls, value: int) -> "TaggedSegment":
        if value < 0:
            raise ValueError(f"count {value} is negative")
        return cls(SegmentKind.COUNT, str(int(value)), float(int(value)))


@dataclass(frozen=True)
class ParseDiagnostic:
    """A note about a span that looked like a tag but did not parse as one."""

    offset: int
    message: str


@dataclass
class ParseReport:
    segments: list[TaggedSegment] = field(default_factory=list)
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)


def parse_report(text: str) -> ParseReport:
    """Parse ``text`` into ordered segments, collecting diagnostics.

    Total over arbitrary input. Untagged spans become prose segments;
    unknown tags are left inside prose verbatim; a known tag whose numeric
    body is malformed is downgraded to prose (the whole span, tags
    included) with a diagnostic.
    """
    report = ParseReport()
    pos = 0
    pending_prose_start = 0

    def flush_prose(end: int) -> None:
        if end > pending_prose_start:
            report.segments.append(TaggedSegment.prose(text[pending_prose_start:end]))

    while True:
        m = _OPEN_RE.search(text, pos)
        if m is None:
            flush_prose(len(text))
            break
        kind = SegmentKind(m.group(1))
        close = f"</{kind.value}>"
        close_at = text.find(close, m.end())
        if close_at < 0:
            # Truncated output: treat the final tag as closed at end-of-text.
            body = text[m.end():]
            span_end = len(text)
        else:
            body = text[m.end():close_at]
            span_end = close_at + len(close)

        if kind in NUMERIC_KINDS:
            try:
                segment = TaggedSegment.tagged(kind, body)
            except ValueError:
                report.diagnostics.append(ParseDiagnostic(
                    offset=m.start(),
                    message=f"<{kind.value}> body {body!r} is not a valid number; kept as prose",
                ))
                pos = span_end
                continue  # span stays inside the running prose
            flush_prose(m.start())
            report.segments.append(segment)
        else:
            flush_prose(m.start())
            report.segments.append(TaggedSegment(kind, body))
        pos = span_end
        pending_prose_start = span_end

    for diag in report.diagnostics:
        logger.warning("tag parse: %s (at offset %d)", diag.message, diag.offset)
    return report


def parse_segments(text: str) -> list[TaggedSegment]:
    """Parse ``text`` into an ordered list of segments (see parse_report)."""
    return parse_report(text).segments


def serialize_segments(segments: list[TaggedSegment]) -> str:
    """Render segments back to wire text.

    Prose bodies are emitted bare; everything else as ``<kind>body</kind>``.
    ``parse_segments(serialize_segments(s)) == s`` for any list produced by
    the parser or the factory constructors.
    """
    parts = []
    for seg in segments:
        if seg.kind is SegmentKind.PROSE:
            parts.append(seg.body)
        else:
            parts.append(f"<{seg.kind.value}>{seg.body}</{seg.kind.value}>")
    return "".join(parts)


def extract_reward(segments: list[TaggedSegment]) -> Optional[float]:
    """Return the last reward value in ``segments``, or None if there is none.

    Evaluator grammars permit a single reward, but when several appear the
    last one wins. Values outside [0, 1] raise RewardOutOfRangeError rather
    than silently entering the control loop.
    """
    value: Optional[float] = None
    for seg in segments:
        if seg.kind is SegmentKind.REWARD:
            value = seg.numeric
    if value is None:
        return None
    if not 0.0 <= value <= 1.0:
        raise RewardOutOfRangeError(value)
    return value


def extract_count(segments: list[TaggedSegment]) -> Optional[int]:
    """Return the last self-reported budget count, or None."""
    value: Optional[int] = None
    for seg in segments:
        if seg.kind is SegmentKind.COUNT and seg.numeric is not None:
            value = int(seg.numeric)
    return value


def first_of(segments: list[TaggedSegment], kind: SegmentKind) -> Optional[TaggedSegment]:
    for seg in segments:
        if seg.kind is kind:
            return seg
    return None


def bodies_of(segments: list[TaggedSegment], kind: SegmentKind) -> list[str]:
    return [seg.body for seg in segments if seg.kind is kind]
