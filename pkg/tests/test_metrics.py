"""Citation metrics against hand-checked values and a brute-force oracle."""

import math
import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from scicopilot.metrics import (
    CitationGraph,
    DisruptionBreakdown,
    GraphIntegrityError,
    MetricsError,
    disruption_for_focal,
    disruption_from_counts,
    group_stats,
    pearson_correlation,
    percent_change,
    percentile_rank,
)

# Ten team sizes with per-group means of a disruption measure and of citation
# counts; frozen reference table used across the correlation tests.
TEAM_SIZES = list(range(1, 11))
DISRUPTION_MEANS = [
    56.098700, 48.618542, 47.145945, 45.950665, 44.964650,
    44.105816, 43.679090, 43.392148, 43.018289, 42.710667,
]
CITATION_MEANS = [
    20.453189, 36.634414, 36.267423, 36.153230, 36.069241,
    36.977249, 38.810713, 39.196685, 40.828852, 41.677381,
]


def brute_force_disruption(years, edges, focal, references, cutoff_year):
    """Independent oracle: walk every paper and classify it from raw edges.

    Deliberately avoids CitationGraph's citer index; membership is checked
    by scanning the edge list each time.
    """
    edge_list = list(edges)

    def cites(a, b):
        return (a, b) in edge_list

    n_i = n_j = n_k = 0
    for paper in years:
        if paper == focal or years[paper] <= cutoff_year:
            continue
        hits_focal = cites(paper, focal)
        hits_ref = any(cites(paper, r) for r in references)
        if hits_focal and not hits_ref:
            n_i += 1
        elif hits_focal and hits_ref:
            n_j += 1
        elif hits_ref:
            n_k += 1
    total = n_i + n_j + n_k
    score = (n_i - n_j) / total if total else None
    return n_i, n_j, n_k, score


class TestDisruptionFromCounts:
    @pytest.mark.parametrize("counts,expected", [
        ((95, 15, 55), 0.484848),
        ((53, 7, 30), 0.511111),
        ((8, 0, 22), 0.266667),
        ((54, 36, 83), 0.104046),
    ])
    def test_reference_rows(self, counts, expected):
        assert disruption_from_counts(*counts).score == pytest.approx(expected, abs=1e-6)

    def test_fully_disruptive(self):
        assert disruption_from_counts(12, 0, 0).score == 1.0

    def test_zero_denominator_has_no_score(self):
        # a popular convention coerces 0/0 to 0; we report "undefined" instead
        assert disruption_from_counts(0, 0, 0).score is None

    def test_negative_counts_rejected(self):
        with pytest.raises(MetricsError):
            disruption_from_counts(-1, 0, 0)

    def test_score_bounds(self):
        for n_i in range(0, 6):
            for n_j in range(0, 6):
                for n_k in range(0, 6):
                    score = disruption_from_counts(n_i, n_j, n_k).score
                    if score is not None:
                        assert -1.0 <= score <= 1.0

    def test_reference_rows_complete_quickly(self):
        start = time.perf_counter()
        for counts in [(95, 15, 55), (53, 7, 30), (8, 0, 22), (54, 36, 83)]:
            disruption_from_counts(*counts)
        assert time.perf_counter() - start < 1.0


class TestDisruptionForFocal:
    def hand_graph(self):
        years = {1: 2000, 2: 2001, 3: 2001, 4: 1995, 5: 2001}
        # paper 1 is focal, 4 its reference; 2 cites only the focal paper,
        # 3 cites both, 5 cites only the reference
        edges = {(2, 1), (3, 1), (3, 4), (5, 4)}
        return CitationGraph(years=years, edges=edges)

    def test_hand_worked_example(self):
        breakdown = disruption_for_focal(self.hand_graph(), 1, {4}, 2000)
        assert (breakdown.n_i, breakdown.n_j, breakdown.n_k) == (1, 1, 1)
        assert breakdown.score == 0.0

    def test_no_relevant_citers(self):
        graph = CitationGraph(years={1: 2000, 2: 1999}, edges=set())
        breakdown = disruption_for_focal(graph, 1, set(), 2000)
        assert breakdown == DisruptionBreakdown(0, 0, 0, None)

    def test_citers_at_cutoff_year_excluded(self):
        years = {1: 2000, 2: 2000, 3: 2001}
        edges = {(2, 1), (3, 1)}
        graph = CitationGraph(years=years, edges=edges)
        breakdown = disruption_for_focal(graph, 1, set(), 2000)
        assert breakdown.n_i == 1  # only the 2001 citer counts

    def test_focal_missing_raises(self):
        graph = CitationGraph(years={1: 2000}, edges=set())
        with pytest.raises(GraphIntegrityError):
            disruption_for_focal(graph, 99, set(), 2000)

    def test_focal_in_references_rejected(self):
        graph = CitationGraph(years={1: 2000}, edges=set())
        with pytest.raises(MetricsError):
            disruption_for_focal(graph, 1, {1}, 2000)

    def test_unknown_reference_rejected(self):
        graph = CitationGraph(years={1: 2000}, edges=set())
        with pytest.raises(GraphIntegrityError):
            disruption_for_focal(graph, 1, {42}, 2000)

    def test_matches_oracle_on_500_random_graphs(self):
        rng = random.Random(20240917)
        start = time.perf_counter()
        for trial in range(500):
            n = rng.randint(2, 50)
            years = {pid: rng.randint(1990, 2010) for pid in range(n)}
            edges = set()
            for _ in range(rng.randint(0, 3 * n)):
                a, b = rng.randrange(n), rng.randrange(n)
                if a != b:
                    edges.add((a, b))
            focal = rng.randrange(n)
            pool = [p for p in years if p != focal]
            references = set(rng.sample(pool, k=rng.randint(0, min(8, len(pool)))))
            cutoff = years[focal]

            got = disruption_for_focal(
                CitationGraph(years=years, edges=edges), focal, references, cutoff,
            )
            want = brute_force_disruption(years, edges, focal, references, cutoff)
            assert (got.n_i, got.n_j, got.n_k, got.score) == want, f"trial {trial}"
        assert time.perf_counter() - start < 30.0

    def test_monotone_in_solo_citers(self):
        # adding a citer that cites only the focal paper never lowers the score
        years = {0: 2000, 1: 1990, 2: 2001, 3: 2002, 4: 2003}
        edges = {(2, 0), (2, 1), (3, 1)}
        graph = CitationGraph(years=years, edges=edges)
        before = disruption_for_focal(graph, 0, {1}, 2000).score
        graph2 = CitationGraph(years=years, edges=edges | {(4, 0)})
        after = disruption_for_focal(graph2, 0, {1}, 2000).score
        assert after >= before


class TestGraphConstruction:
    def test_self_citation_rejected(self):
        with pytest.raises(GraphIntegrityError):
            CitationGraph(years={1: 2000}, edges={(1, 1)})

    def test_dangling_endpoint_rejected(self):
        with pytest.raises(GraphIntegrityError, match="2"):
            CitationGraph(years={1: 2000}, edges={(2, 1)})

    def test_csv_round_trip(self, tmp_path):
        papers = tmp_path / "papers.csv"
        papers.write_text("paper_id,year\n1,2000\n2,2001\n")
        edges = tmp_path / "edges.csv"
        edges.write_text("citing_paper_id,cited_paper_id\n2,1\n")
        graph = CitationGraph.from_csv_files(papers, edges)
        assert graph.years == {1: 2000, 2: 2001}
        assert graph.citers_of(1) == {2}


class TestPercentileRank:
    def test_minimum_of_distinct_set(self):
        assert percentile_rank([1, 2, 3, 4], 1) == 0.0

    def test_maximum_of_distinct_set(self):
        assert percentile_rank([1, 2, 3, 4], 4) == 75.0

    def test_ties_counted_strictly_below(self):
        assert percentile_rank([1, 2, 2, 3], 2) == 25.0

    def test_empty_population_rejected(self):
        with pytest.raises(MetricsError):
            percentile_rank([], 1)

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
        st.floats(-1e6, 1e6),
        st.floats(-1e6, 1e6),
    )
    def test_monotone_in_value(self, population, a, b):
        lo, hi = min(a, b), max(a, b)
        assert percentile_rank(population, lo) <= percentile_rank(population, hi)


class TestGroupStats:
    def test_constant_group(self):
        (summary,) = group_stats([("a", 5), ("a", 5), ("a", 5)])
        assert summary.mean == 5
        assert summary.std == 0
        assert summary.ci_low == summary.ci_high == 5

    def test_two_point_group_hand_computed(self):
        (summary,) = group_stats([("g", 1), ("g", 3)])
        assert summary.mean == 2
        assert summary.std == pytest.approx(math.sqrt(2))
        assert summary.std_error == pytest.approx(1.0)
        assert summary.ci_low == pytest.approx(0.04)
        assert summary.ci_high == pytest.approx(3.96)

    def test_singleton_group_has_zero_spread(self):
        (summary,) = group_stats([("g", 7.5)])
        assert summary.count == 1
        assert summary.std == 0.0
        assert summary.std_error == 0.0

    def test_groups_sorted_by_key(self):
        summaries = group_stats([(2, 1.0), (1, 2.0), (2, 3.0)])
        assert [s.group_key for s in summaries] == [1, 2]

    def test_key_function(self):
        records = [{"team": 1, "score": 4.0}, {"team": 1, "score": 6.0}]
        (summary,) = group_stats(records, key=lambda r: (r["team"], r["score"]))
        assert summary.mean == 5.0

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            group_stats([])

    def test_ci_always_brackets_mean(self):
        summaries = group_stats([(i % 3, float(i)) for i in range(20)])
        for s in summaries:
            assert s.ci_low <= s.mean <= s.ci_high


class TestPearsonCorrelation:
    def test_identity_series(self):
        xs = [1.0, 2.0, 3.0, 4.0]
        assert pearson_correlation(xs, xs) == pytest.approx(1.0)

    def test_negative_affine(self):
        xs = [1.0, 2.0, 3.0, 4.0]
        ys = [-2 * x + 3 for x in xs]
        assert pearson_correlation(xs, ys) == pytest.approx(-1.0)

    def test_team_size_vs_disruption(self):
        r = pearson_correlation(TEAM_SIZES, DISRUPTION_MEANS)
        assert r == pytest.approx(-0.846, abs=1e-3)

    def test_team_size_vs_citations(self):
        r = pearson_correlation(TEAM_SIZES, CITATION_MEANS)
        assert r == pytest.approx(0.755, abs=1e-3)

    def test_zero_variance_rejected(self):
        with pytest.raises(MetricsError):
            pearson_correlation([1.0, 1.0], [1.0, 2.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(MetricsError):
            pearson_correlation([1.0], [1.0, 2.0])

    @given(
        st.lists(st.integers(-100, 100).map(float), min_size=3, max_size=20).filter(
            lambda xs: len(set(xs)) > 1
        ),
        st.floats(0.1, 50, allow_nan=False),
        st.floats(-50, 50, allow_nan=False),
    )
    @settings(deadline=None)
    def test_invariant_under_positive_affine_transform(self, xs, scale, shift):
        ys = [math.sin(x) for x in xs]
        base = pearson_correlation(xs, ys)
        transformed = pearson_correlation([scale * x + shift for x in xs], ys)
        assert abs(transformed - base) < 1e-12


class TestPercentChange:
    def test_disruption_trend(self):
        change = percent_change(DISRUPTION_MEANS[0], DISRUPTION_MEANS[-1])
        assert change == pytest.approx(-23.9, abs=0.05)

    def test_citation_trend(self):
        change = percent_change(CITATION_MEANS[0], CITATION_MEANS[-1])
        assert change == pytest.approx(103.8, abs=0.05)

    def test_no_change(self):
        assert percent_change(3.7, 3.7) == 0.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(MetricsError):
            percent_change(0.0, 1.0)
