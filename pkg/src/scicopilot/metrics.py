"""Deterministic citation-graph metrics and summary statistics.

The disruption index partitions the papers citing a focal work into three
camps: those that cite only the focal paper (n_i), those that cite the focal
paper together with at least one of its references (n_j), and those that cite
only the references (n_k). The score (n_i - n_j) / (n_i + n_j + n_k) then
lands in [-1, 1]: positive when later work leans on the focal paper instead
of its intellectual ancestors, negative when the focal paper is bypassed.

Everything in this module is pure: set arithmetic on identifiers for the
counts, double precision only for the final ratios.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence


class GraphIntegrityError(ValueError):
    """A citation edge refers to a missing paper or cites itself."""


class MetricsError(ValueError):
    """Invalid input to a metric (empty population, zero variance, ...)."""


@dataclass
class CitationGraph:
    """Immutable-by-convention citation graph.

    ``years`` maps paper_id to publication year; ``edges`` holds
    (citing_paper_id, cited_paper_id) pairs. Construction validates that no
    edge is a self-citation and that both endpoints are known papers.
    """

    years: dict[int, int]
    edges: set[tuple[int, int]]
    _citers: dict[int, set[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for citing, cited in self.edges:
            if citing == cited:
                raise GraphIntegrityError(f"paper {citing} cites itself")
            if citing not in self.years:
                raise GraphIntegrityError(f"citing paper {citing} is not in the graph")
            if cited not in self.years:
                raise GraphIntegrityError(f"cited paper {cited} is not in the graph")
        citers: dict[int, set[int]] = {}
        for citing, cited in self.edges:
            citers.setdefault(cited, set()).add(citing)
        self._citers = citers

    def citers_of(self, paper_id: int) -> set[int]:
        return self._citers.get(paper_id, set())

    @classmethod
    def from_rows(
        cls,
        papers: Iterable[tuple[int, int]],
        edges: Iterable[tuple[int, int]],
    ) -> "CitationGraph":
        return cls(years=dict(papers), edges=set(edges))

    @classmethod
    def from_csv_files(cls, papers_csv: Path, edges_csv: Path) -> "CitationGraph":
        """Load a graph from a (paper_id, year) CSV and a two-column edge CSV.

        Both files must have a header row; column order is taken as given.
        """
        with open(papers_csv, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            papers = [(int(row[0]), int(row[1])) for row in reader if row]
        with open(edges_csv, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            edges = [(int(row[0]), int(row[1])) for row in reader if row]
        return cls.from_rows(papers, edges)


@dataclass(frozen=True)
class DisruptionBreakdown:
    n_i: int
    n_j: int
    n_k: int
    score: Optional[float]


@dataclass(frozen=True)
class GroupSummary:
    group_key: object
    mean: float
    std: float
    count: int
    std_error: float
    ci_low: float
    ci_high: float


def disruption_from_counts(n_i: int, n_j: int, n_k: int) -> DisruptionBreakdown:
    """Fold raw citer counts into a DisruptionBreakdown.

    A zero denominator (no relevant citers at all) yields an absent score
    rather than a value: 0/0 is not "neutral", it is undefined.
    """
    if min(n_i, n_j, n_k) < 0:
        raise MetricsError(f"negative count in ({n_i}, {n_j}, {n_k})")
    denominator = n_i + n_j + n_k
    if denominator == 0:
        return DisruptionBreakdown(n_i, n_j, n_k, None)
    return DisruptionBreakdown(n_i, n_j, n_k, (n_i - n_j) / denominator)


def disruption_for_focal(
    graph: CitationGraph,
    focal: int,
    references: set[int],
    min_citing_year_exclusive: int,
) -> DisruptionBreakdown:
    """Classify every citer of the focal paper or its references.

    Only papers published strictly after ``min_citing_year_exclusive`` count
    (pass the focal paper's own year for the conventional definition). The
    focal paper never counts as its own citer.
    """
    if focal not in graph.years:
        raise GraphIntegrityError(f"focal paper {focal} is not in the graph")
    if focal in references:
        raise MetricsError("the reference set must not contain the focal paper")
    unknown = references - graph.years.keys()
    if unknown:
        raise GraphIntegrityError(
            f"reference papers not in the graph: {sorted(unknown)}"
        )

    cite_focal = graph.citers_of(focal)
    cite_refs: set[int] = set()
    for ref in references:
        cite_refs |= graph.citers_of(ref)

    n_i = n_j = n_k = 0
    for paper in (cite_focal | cite_refs) - {focal}:
        if graph.years[paper] <= min_citing_year_exclusive:
            continue
        hits_focal = paper in cite_focal
        hits_refs = paper in cite_refs
        if hits_focal and hits_refs:
            n_j += 1
        elif hits_focal:
            n_i += 1
        else:
            n_k += 1
    return disruption_from_counts(n_i, n_j, n_k)


def percentile_rank(population: Sequence[float], v: float) -> float:
    """Fraction of the population strictly below ``v``, times 100."""
    if len(population) == 0:
        raise MetricsError("percentile rank over an empty population")
    below = sum(1 for x in population if x < v)
    return 100.0 * below / len(population)


def group_stats(
    records: Iterable,
    key: Optional[Callable[[object], tuple[object, float]]] = None,
) -> list[GroupSummary]:
    """Per-group mean, sample std, and a 1.96-sigma confidence interval.

    ``records`` is an iterable of (group_key, value) pairs, or of arbitrary
    items when ``key`` maps an item to such a pair. Standard deviation uses
    the n-1 denominator and is defined as 0 for singleton groups; the
    interval is mean +/- 1.96 * std / sqrt(n). Output is sorted by group key.
    """
    grouped: dict[object, list[float]] = {}
    for item in records:
        group, value = key(item) if key is not None else item
        grouped.setdefault(group, []).append(float(value))
    if not grouped:
        raise MetricsError("group_stats over an empty record list")

    summaries = []
    for group in sorted(grouped):
        values = grouped[group]
        n = len(values)
        mean = sum(values) / n
        if n > 1:
            std = math.sqrt(sum((x - mean) ** 2 for x in values) / (n - 1))
        else:
            std = 0.0
        se = std / math.sqrt(n)
        summaries.append(GroupSummary(
            group_key=group,
            mean=mean,
            std=std,
            count=n,
            std_error=se,
            ci_low=mean - 1.96 * se,
            ci_high=mean + 1.96 * se,
        ))
    return summaries


def pearson_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise MetricsError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise MetricsError("correlation needs at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise MetricsError("correlation undefined for a zero-variance series")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)


def percent_change(first: float, last: float) -> float:
    """Relative change from ``first`` to ``last``, in percent."""
    if first == 0:
        raise MetricsError("percent change from a zero baseline is undefined")
    return 100.0 * (last - first) / first
