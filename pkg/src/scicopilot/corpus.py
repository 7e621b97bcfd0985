"""Literature corpus: ingestion, HyDE expansion, filtered retrieval, synthesis.

A corpus is an immutable bag of paragraph-level chunks, each tagged with a
section label, a short summary, and a unit-norm embedding of its body. All
provider-backed steps (section classification, summaries, HyDE, synthesis)
degrade to deterministic fallbacks so the pipeline runs without a model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .embeddings import EMBEDDING_DIM, cosine_similarity, text_embedding
from .providers import ChatMessage, GatewayError, Provider, ProtocolError


class SectionLabel(str, Enum):
    ALL = "All"
    ABSTRACT = "Abstract"
    INTRODUCTION = "Introduction"
    RELATED_WORKS = "Related Works"
    METHODOLOGY = "Methodology"
    RESULTS = "Results"
    DISCUSSION = "Discussion"
    CONCLUSION = "Conclusion"
    APPENDIX = "Appendix"
    ACKNOWLEDGEMENT = "Acknowledgement"


# Every label a chunk may carry; "All" exists only as a filter wildcard.
STORED_SECTIONS = tuple(s for s in SectionLabel if s is not SectionLabel.ALL)

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_MARKER_RE = re.compile(r"\[(\d+)\]")

# Leading-header keywords checked in order against the start of a paragraph.
_SECTION_PREFIXES = (
    ("abstract", SectionLabel.ABSTRACT),
    ("introduction", SectionLabel.INTRODUCTION),
    ("related work", SectionLabel.RELATED_WORKS),
    ("background", SectionLabel.RELATED_WORKS),
    ("materials and methods", SectionLabel.METHODOLOGY),
    ("methodology", SectionLabel.METHODOLOGY),
    ("method", SectionLabel.METHODOLOGY),
    ("result", SectionLabel.RESULTS),
    ("discussion", SectionLabel.DISCUSSION),
    ("conclusion", SectionLabel.CONCLUSION),
    ("concluding remarks", SectionLabel.CONCLUSION),
    ("appendix", SectionLabel.APPENDIX),
    ("supplementary", SectionLabel.APPENDIX),
    ("acknowledgement", SectionLabel.ACKNOWLEDGEMENT),
    ("acknowledgment", SectionLabel.ACKNOWLEDGEMENT),
)

_CLASSIFIER_SYSTEM = (
    "Classify the paragraph into exactly one section of a research paper. "
    "Answer with one label from: "
    + ", ".join(s.value for s in STORED_SECTIONS)
    + ". Output the label and nothing else."
)
_SUMMARIZER_SYSTEM = "Summarize the paragraph in two to three sentences."
_HYDE_SYSTEM = (
    "Write a short hypothetical passage from a research paper that would "
    "directly answer the query. Output the passage and nothing else."
)
_SYNTHESIS_SYSTEM = (
    "Write one comprehensive paragraph answering the query from the numbered "
    "excerpts. Cite excerpts inline with bracketed numbers like [1]. Use only "
    "numbers that appear in the excerpt list."
)


@dataclass(frozen=True)
class DocumentMeta:
    title: str
    authors: tuple[str, ...]
    year: int

    def __post_init__(self):
        if not self.title:
            raise ValueError("document title must be non-empty")


@dataclass(frozen=True, eq=False)
class CorpusChunk:
    chunk_id: str
    paper_title: str
    authors: tuple[str, ...]
    year: int
    section: SectionLabel
    body: str
    summary: str
    embedding: np.ndarray

    def __post_init__(self):
        if self.section is SectionLabel.ALL:
            raise ValueError("chunks never carry the All label")
        if not self.body:
            raise ValueError("chunk body must be non-empty")
        if not self.summary:
            raise ValueError("chunk summary must be non-empty")
        if self.embedding.shape != (EMBEDDING_DIM,):
            raise ValueError(f"embedding must have shape ({EMBEDDING_DIM},)")


@dataclass(frozen=True)
class LiteratureQuery:
    query: str
    k: int = 10
    year: Optional[int] = None
    author: Optional[str] = None
    section: SectionLabel = SectionLabel.ALL
    title: Optional[str] = None

    def __post_init__(self):
        if not self.query.strip():
            raise ValueError("query must be non-empty")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not isinstance(self.section, SectionLabel):
            object.__setattr__(self, "section", SectionLabel(self.section))


@dataclass(frozen=True)
class HydeExpansion:
    text: str
    fallback: bool


@dataclass(frozen=True)
class Reference:
    number: int
    title: str
    authors: tuple[str, ...]
    year: int


@dataclass(frozen=True)
class SynthesisResult:
    text: str
    references: tuple[Reference, ...]

    def rendered(self) -> str:
        if not self.references:
            return self.text
        lines = [self.text, "", "References:"]
        for ref in self.references:
            lines.append(f"[{ref.number}] {ref.title}. {', '.join(ref.authors)}. {ref.year}.")
        return "\n".join(lines)


class Corpus:
    """Immutable collection of chunks with unique ids."""

    def __init__(self, chunks: Sequence[CorpusChunk]):
        ids = [c.chunk_id for c in chunks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate chunk ids in corpus")
        self._chunks = tuple(chunks)

    @property
    def chunks(self) -> tuple[CorpusChunk, ...]:
        return self._chunks

    def __len__(self) -> int:
        return len(self._chunks)

    def __iter__(self):
        return iter(self._chunks)

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for chunk in self._chunks:
                fh.write(json.dumps({
                    "chunk_id": chunk.chunk_id,
                    "paper_title": chunk.paper_title,
                    "authors": list(chunk.authors),
                    "year": chunk.year,
                    "section": chunk.section.value,
                    "body": chunk.body,
                    "summary": chunk.summary,
                    "embedding": chunk.embedding.tolist(),
                }) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "Corpus":
        chunks = []
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            raw = json.loads(line)
            try:
                chunks.append(CorpusChunk(
                    chunk_id=raw["chunk_id"],
                    paper_title=raw["paper_title"],
                    authors=tuple(raw["authors"]),
                    year=raw["year"],
                    section=SectionLabel(raw["section"]),
                    body=raw["body"],
                    summary=raw["summary"],
                    embedding=np.asarray(raw["embedding"], dtype=np.float64),
                ))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"corpus line {line_no}: {exc}") from exc
        return cls(chunks)


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-") or "untitled"


def heuristic_section(body: str) -> SectionLabel:
    head = body.lstrip().lower()
    for prefix, label in _SECTION_PREFIXES:
        if head.startswith(prefix):
            return label
    return SectionLabel.DISCUSSION


def fallback_summary(body: str) -> str:
    sentences = _SENTENCE_RE.split(body.strip())
    return " ".join(sentences[:2])


def _ask(provider: Provider, system: str, user: str) -> Optional[str]:
    """One provider round-trip; None when it fails or returns no text."""
    try:
        response = provider.complete([
            ChatMessage.text("system", system),
            ChatMessage.text("user", user),
        ])
    except GatewayError:
        return None
    return response.text.strip() or None


def ingest_document(
    meta: DocumentMeta,
    paragraphs: Sequence[str],
    classifier: Optional[Provider] = None,
    summarizer: Optional[Provider] = None,
) -> list[CorpusChunk]:
    """Chunk a parsed document, one chunk per paragraph, order preserved.

    Section labels come from the classifier provider when one is supplied
    (any invalid or failed response falls back to the keyword heuristic);
    summaries come from the summarizer provider, else the first two
    sentences of the body.
    """
    cleaned = [p.strip() for p in paragraphs if p.strip()]
    if not cleaned:
        raise ValueError("paragraph list must be non-empty")

    base = f"{_slug(meta.title)}-{meta.year}"
    chunks = []
    for index, body in enumerate(cleaned):
        section = None
        if classifier is not None:
            answer = _ask(classifier, _CLASSIFIER_SYSTEM, body)
            if answer is not None:
                try:
                    label = SectionLabel(answer)
                except ValueError:
                    label = None
                if label is not None and label is not SectionLabel.ALL:
                    section = label
        if section is None:
            section = heuristic_section(body)

        summary = None
        if summarizer is not None:
            summary = _ask(summarizer, _SUMMARIZER_SYSTEM, body)
        if not summary:
            summary = fallback_summary(body)

        chunks.append(CorpusChunk(
            chunk_id=f"{base}-p{index:04d}",
            paper_title=meta.title,
            authors=meta.authors,
            year=meta.year,
            section=section,
            body=body,
            summary=summary,
            embedding=text_embedding(body),
        ))
    return chunks


def hyde_expand(query: str, provider: Optional[Provider] = None) -> HydeExpansion:
    """Expand a query into a hypothetical answering passage.

    Falls back to the query itself (flagged) when no provider is configured
    or the provider fails; retrieval must stay live either way.
    """
    if not query.strip():
        raise ValueError("query must be non-empty")
    if provider is None:
        return HydeExpansion(text=query, fallback=True)
    answer = _ask(provider, _HYDE_SYSTEM, query)
    if answer is None:
        return HydeExpansion(text=query, fallback=True)
    return HydeExpansion(text=answer, fallback=False)


def _passes_filters(chunk: CorpusChunk, q: LiteratureQuery) -> bool:
    if q.year is not None and chunk.year != q.year:
        return False
    if q.section is not SectionLabel.ALL and chunk.section is not q.section:
        return False
    if q.author is not None:
        needle = q.author.lower()
        if not any(needle in a.lower() for a in chunk.authors):
            return False
    if q.title is not None and q.title.lower() not in chunk.paper_title.lower():
        return False
    return True


def retrieve(
    corpus: Corpus,
    q: LiteratureQuery,
    provider: Optional[Provider] = None,
) -> list[tuple[CorpusChunk, float]]:
    """Top-k chunks passing every active filter, by cosine similarity.

    The query embedding comes from the HyDE expansion; similarity order is
    non-increasing with ties broken by chunk_id.
    """
    expansion = hyde_expand(q.query, provider)
    query_vec = text_embedding(expansion.text)
    candidates = [c for c in corpus if _passes_filters(c, q)]
    scored = [(cosine_similarity(c.embedding, query_vec), c) for c in candidates]
    scored.sort(key=lambda item: (-item[0], item[1].chunk_id))
    return [(chunk, sim) for sim, chunk in scored[: q.k]]


NO_RESULTS_TEXT = "No relevant results were found in the literature corpus."


def _reference_list(hits: Sequence[tuple[CorpusChunk, float]]) -> tuple[Reference, ...]:
    seen = {}
    for chunk, _sim in hits:
        key = (chunk.paper_title, chunk.authors, chunk.year)
        if key not in seen:
            seen[key] = Reference(
                number=len(seen) + 1,
                title=chunk.paper_title,
                authors=chunk.authors,
                year=chunk.year,
            )
    return tuple(seen.values())


def synthesize(
    query: str,
    hits: Sequence[tuple[CorpusChunk, float]],
    provider: Optional[Provider] = None,
) -> SynthesisResult:
    """Compose a referenced answer paragraph from retrieved chunks.

    Every bracketed marker in the output must index the reference list; a
    provider response that cites anything else is rejected. Provider
    failures retry once before surfacing.
    """
    if not hits:
        return SynthesisResult(text=NO_RESULTS_TEXT, references=())

    references = _reference_list(hits)
    ref_number = {
        (r.title, r.authors, r.year): r.number for r in references
    }

    if provider is None:
        sentences = []
        for chunk, _sim in hits:
            number = ref_number[(chunk.paper_title, chunk.authors, chunk.year)]
            sentences.append(f"{chunk.summary} [{number}]")
        return SynthesisResult(text=" ".join(sentences), references=references)

    excerpts = []
    for chunk, _sim in hits:
        number = ref_number[(chunk.paper_title, chunk.authors, chunk.year)]
        excerpts.append(f"[{number}] ({chunk.section.value}) {chunk.summary}")
    user = f"Query: {query}\n\nExcerpts:\n" + "\n".join(excerpts)

    text = _ask(provider, _SYNTHESIS_SYSTEM, user)
    if text is None:
        text = _ask(provider, _SYNTHESIS_SYSTEM, user)  # one retry
    if text is None:
        raise GatewayError("synthesis provider failed twice")

    valid = {r.number for r in references}
    for marker in _MARKER_RE.findall(text):
        if int(marker) not in valid:
            raise ProtocolError(
                f"synthesis cites [{marker}] but only {sorted(valid)} exist"
            )
    return SynthesisResult(text=text, references=references)
