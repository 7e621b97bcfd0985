#!/usr/bin/env python3
"""Regenerate the packaged standard data-lake fixture.

Writes one CSV per catalog table into src/scicopilot/fixtures/standard/.
Output is fully deterministic (fixed RNG seed), so rerunning the script
after a schema change produces a clean, reviewable diff.

The institutions and fields tables carry curated disambiguation rows that
the name-search tests rely on; everything else is synthetic but internally
consistent: citation counts equal in-degrees of the generated citation
graph, disruption scores are computed from that graph with the package's
own metrics, and every foreign key resolves.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

from scicopilot.catalog import CATALOG
from scicopilot.metrics import CitationGraph, disruption_for_focal, percentile_rank

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "scicopilot" / "fixtures" / "standard"

INSTITUTIONS = [
    (136199984, "Harvard University", "grid.38142.3c", "http://www.harvard.edu/", 42.37444, -71.1694),
    (2801851002, "Harvard University Press", "grid.446714.4", None, 42.3830147, -71.12706),
    (32971472, "Yale University", "grid.47100.32", "http://www.yale.edu/", 41.31111, -72.92667),
    (20089843, "Princeton University", "grid.16750.35", "http://www.princeton.edu/", 40.34873, -74.65931),
    (205783295, "Cornell University", "grid.5386.8", "http://www.cornell.edu/", 42.45345, -76.4735),
    (78577930, "Columbia University", "grid.21729.3f", "http://www.columbia.edu/", 40.8075, -73.96194),
    (27804330, "Brown University", "grid.40263.33", "http://www.brown.edu/", 41.8262, -71.4032),
    (121934306, "Tufts University", "grid.429997.8", "http://www.tufts.edu/", 42.4069481, -71.1982),
    (145311948, "Johns Hopkins University", "grid.21107.35", "http://www.jhu.edu/", 39.32889, -76.62028),
    (107672454, "Dartmouth College", "grid.254880.3", "http://dartmouth.edu/", 43.70333, -72.28833),
    (79576946, "University of Pennsylvania", "grid.25879.31", "http://www.upenn.edu/", 39.95, -75.19),
    (130769515, "Pennsylvania State University", "grid.29857.31", "http://www.psu.edu/", 40.79611, -77.86278),
    (922845939, "Philadelphia University", "grid.261870.a", "http://www.philau.edu/", 40.023, -75.192),
    (2799810409, "Hospital of the University of Pennsylvania", "grid.411115.1", None, 39.95, -75.1936),
    (2802460994, "William Penn University", "grid.441278.c", None, 41.309, -92.6481),
    (200885203, "Indiana University of Pennsylvania", "grid.257427.1", "http://www.iup.edu/", 40.617, -79.16),
    (36788626, "California University of Pennsylvania", "grid.253569.e", "http://www.calu.edu/", 40.06678, -79.88482),
    (161171246, "West Chester University of Pennsylvania", "grid.268132.c", "http://www.wcupa.edu/", 39.95219, -75.6001),
    (84392919, "Temple University", "grid.264727.2", "http://www.temple.edu/", 39.981, -75.16),
    (104651037, "Millersville University of Pennsylvania", "grid.260049.9", "http://www.millersville.edu/", 40.0, -76.356),
]

FIELDS = [
    (121332964, "Physics", "Top"),
    (61696701, "Engineering physics", "Sub"),
    (109214941, "Particle physics", "Sub"),
    (127413603, "Engineering", "Top"),
    (37914503, "Mathematical physics", "Sub"),
    (33332235, "Theoretical physics", "Sub"),
    (147789679, "Physical chemistry", "Sub"),
    (121864883, "Statistical physics", "Sub"),
    (159467904, "Chemical physics", "Sub"),
    (30475298, "Computational physics", "Sub"),
    (41008148, "Computer science", "Top"),
    (86803240, "Biology", "Top"),
    (185592680, "Chemistry", "Top"),
    (71924100, "Medicine", "Top"),
    (33923547, "Mathematics", "Top"),
]

FIRST_NAMES = [
    "Alice", "Wei", "Maria", "John", "Priya", "Kenji", "Sofia", "Omar",
    "Elena", "David", "Fatima", "Lars", "Grace", "Pablo", "Nina", "Tom",
    "Yuki", "Ahmed",
]
LAST_NAMES = [
    "Chen", "Garcia", "Smith", "Patel", "Tanaka", "Johnson", "Mueller",
    "Rossi", "Kim", "Novak", "Okafor", "Silva", "Ivanov", "Dubois",
    "Nakamura", "Brown", "Haddad", "Lindqvist",
]

JOURNALS = [
    (104845983, "Physical Review Letters", "0031-9007", "American Physical Society",
     "https://journals.aps.org/prl/"),
    (3880285, "Nature", "0028-0836", "Springer Nature", "https://www.nature.com/"),
    (23254222, "Science", "0036-8075", "American Association for the Advancement of Science",
     "https://www.science.org/"),
    (125754415, "Proceedings of the National Academy of Sciences", "0027-8424",
     "National Academy of Sciences", "https://www.pnas.org/"),
    (137773608, "Journal of Informetrics", "1751-1577", "Elsevier",
     "https://www.sciencedirect.com/journal/journal-of-informetrics"),
]

CONFERENCES = [
    (1130985203, "KDD", "ACM SIGKDD Conference on Knowledge Discovery and Data Mining"),
    (1180662882, "WWW", "The Web Conference"),
]

TOPICS = [
    ("quantum entanglement in spin chains", "Physics"),
    ("superconducting qubit coherence", "Physics"),
    ("turbulent flow over rough surfaces", "Engineering"),
    ("network centrality in collaboration graphs", "Computer science"),
    ("protein folding pathways", "Biology"),
    ("catalytic surface reactions", "Chemistry"),
    ("randomized clinical trial design", "Medicine"),
    ("spectral graph partitioning", "Mathematics"),
    ("dark matter detection thresholds", "Particle physics"),
    ("lattice models of phase transitions", "Statistical physics"),
    ("citation dynamics of scientific fields", "Computer science"),
    ("gene regulatory network inference", "Biology"),
]

N_PAPERS = 60


def _write(table: str, rows: list[dict]) -> None:
    spec = CATALOG[table]
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / f"{table}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=spec.column_names)
        writer.writeheader()
        for row in rows:
            writer.writerow({
                key: ("" if value is None else value) for key, value in row.items()
            })
    print(f"wrote {table}.csv ({len(rows)} rows)")


def main() -> None:
    rng = random.Random(1701)

    field_by_name = {name: fid for fid, name, _level in FIELDS}
    author_rows = []
    for i in range(36):
        author_rows.append({
            "author_id": 2100000000 + i * 317,
            "author_name": f"{FIRST_NAMES[i % len(FIRST_NAMES)]} {LAST_NAMES[(i * 7) % len(LAST_NAMES)]}",
            "author_gender": ["male", "female", "unknown"][i % 3],
        })

    # papers, oldest first so citations can only point backwards in time
    paper_ids = sorted(rng.sample(range(1900000000, 2100000000), N_PAPERS))
    years = sorted(rng.choices(range(1985, 2019), k=N_PAPERS))
    papers = []
    for pid, year in zip(paper_ids, years):
        topic, field_name = TOPICS[rng.randrange(len(TOPICS))]
        is_journal = rng.random() < 0.8
        papers.append({
            "paper_id": pid,
            "year": year,
            "topic": topic,
            "field_id": field_by_name[field_name],
            "doc_type": "Journal" if is_journal else "Conference",
            "journal": rng.choice(JOURNALS) if is_journal else None,
            "conference": None if is_journal else rng.choice(CONFERENCES),
        })

    # citation edges: each paper cites up to six strictly older papers
    edges = set()
    for idx, paper in enumerate(papers):
        older = [p["paper_id"] for p in papers[:idx] if p["year"] < paper["year"]]
        if not older:
            continue
        for cited in rng.sample(older, k=min(len(older), rng.randint(0, 6))):
            edges.add((paper["paper_id"], cited))

    in_degree = {p["paper_id"]: 0 for p in papers}
    out_refs = {p["paper_id"]: set() for p in papers}
    for citing, cited in edges:
        in_degree[cited] += 1
        out_refs[citing].add(cited)

    graph = CitationGraph(
        years={p["paper_id"]: p["year"] for p in papers},
        edges=edges,
    )
    disruption = {}
    for paper in papers:
        pid = paper["paper_id"]
        breakdown = disruption_for_focal(graph, pid, out_refs[pid], paper["year"])
        disruption[pid] = breakdown.score

    # affiliations drive author/institution counts
    affiliation_rows = []
    paper_team = {}
    for paper in papers:
        team = rng.sample(author_rows, k=rng.randint(1, 4))
        institutions = []
        for order, author in enumerate(team, start=1):
            inst = rng.choice(INSTITUTIONS)
            institutions.append(inst[0])
            affiliation_rows.append({
                "paper_id": paper["paper_id"],
                "author_id": author["author_id"],
                "institution_id": inst[0],
                "author_order": order,
            })
        paper_team[paper["paper_id"]] = (len(team), len(set(institutions)))

    citation_counts = [in_degree[p["paper_id"]] for p in papers]
    disruption_present = [v for v in disruption.values() if v is not None]
    novelty = {p["paper_id"]: round(rng.uniform(-4.0, 2.0), 4) for p in papers}
    conventionality = {p["paper_id"]: round(rng.uniform(20.0, 95.0), 4) for p in papers}

    paper_rows = []
    for paper in papers:
        pid = paper["paper_id"]
        cites = in_degree[pid]
        team_size, inst_count = paper_team[pid]
        journal = paper["journal"]
        conference = paper["conference"]
        score = disruption[pid]
        month, day = rng.randint(1, 12), rng.randint(1, 28)
        paper_rows.append({
            "paper_id": pid,
            "doi": f"10.{rng.randint(1000, 9999)}/{pid}",
            "doc_type": paper["doc_type"],
            "year": paper["year"],
            "date": f"{paper['year']}-{month:02d}-{day:02d}",
            "author_count": team_size,
            "institution_count": inst_count,
            "journal_id": journal[0] if journal else None,
            "journal_name": journal[1] if journal else None,
            "journal_issn": journal[2] if journal else None,
            "journal_publisher": journal[3] if journal else None,
            "journal_url": journal[4] if journal else None,
            "conference_id": conference[0] if conference else None,
            "conference_abbr_name": conference[1] if conference else None,
            "conference_name": conference[2] if conference else None,
            "citation_count": cites,
            "citation_count_pct": round(percentile_rank(citation_counts, cites), 4),
            "citation_count_10y": min(cites, rng.randint(0, cites) if cites else 0),
            "citation_count_5y": min(cites, rng.randint(0, max(cites - 1, 0)) if cites else 0),
            "reference_count": len(out_refs[pid]),
            "disruption_score": None if score is None else round(score, 6),
            "disruption_score_pct": (
                None if score is None
                else round(percentile_rank(disruption_present, score), 4)
            ),
            "novelty_score": novelty[pid],
            "novelty_score_pct": round(percentile_rank(list(novelty.values()), novelty[pid]), 4),
            "conventionality_score": conventionality[pid],
            "conventionality_score_pct": round(
                percentile_rank(list(conventionality.values()), conventionality[pid]), 4
            ),
            "title": f"On {paper['topic']}: paper {pid % 997}",
            "abstract": (
                f"We investigate {paper['topic']} using data collected over "
                f"{rng.randint(2, 15)} years. Results show a "
                f"{rng.choice(['strong', 'moderate', 'weak'])} effect with implications for "
                f"{rng.choice(['policy', 'theory', 'practice', 'future experiments'])}."
            ),
            "abstract_embedding": None,  # derived at load time
        })

    field_rows = []
    for paper in papers:
        pid = paper["paper_id"]
        pct = percentile_rank(citation_counts, in_degree[pid])
        chosen = {paper["field_id"]}
        if rng.random() < 0.3:
            chosen.add(rng.choice(FIELDS)[0])
        for fid in sorted(chosen):
            field_rows.append({
                "paper_id": pid,
                "field_id": fid,
                "is_hit_1pct": pct >= 99.0,
                "is_hit_5pct": pct >= 95.0,
                "is_hit_10pct": pct >= 90.0,
                "normalized_citations": round(in_degree[pid] / 3.1, 4),
            })

    patent_rows = []
    for i in range(8):
        year = rng.randint(2002, 2018)
        patent_rows.append({
            "patent_id": f"US{rng.randint(6000000, 9999999)}B2",
            "type": "utility",
            "date": f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            "year": year,
            "title": f"Method and apparatus for {TOPICS[i % len(TOPICS)][0]}",
            "abstract": f"A system implementing {TOPICS[i % len(TOPICS)][0]} at scale.",
            "abstract_embedding": None,
        })

    nct_rows = [{"nct_id": f"NCT{100000 + i * 7919:08d}"} for i in range(6)]
    nih_rows = [
        {"nih_project_id": f"5R01GM{10000 + i * 1237:06d}-{rng.randint(1, 9):02d}"}
        for i in range(6)
    ]
    nsf_rows = [
        {
            "nsf_award_id": str(800000 + i * 10501),
            "date": f"{rng.randint(2000, 2018)}-{rng.randint(1, 12):02d}-01",
            "title": f"Collaborative Research: {TOPICS[(i * 5) % len(TOPICS)][0].capitalize()}",
        }
        for i in range(6)
    ]
    tweet_rows = [
        {
            "tweet_id": 900000000000000000 + i * 104729,
            "date": f"{rng.randint(2014, 2020)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            "url": f"https://twitter.com/i/status/{900000000000000000 + i * 104729}",
        }
        for i in range(10)
    ]
    news_rows = [
        {
            "newsfeed_id": f"https://news.example.org/story/{2000 + i * 37}",
            "date": f"{rng.randint(2012, 2020)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            "title": f"New study sheds light on {TOPICS[(i * 3) % len(TOPICS)][0]}",
        }
        for i in range(6)
    ]

    def links(entities, id_key, count):
        rows = []
        seen = set()
        for _ in range(count):
            paper = rng.choice(papers)["paper_id"]
            entity = rng.choice(entities)[id_key]
            if (paper, entity) in seen:
                continue
            seen.add((paper, entity))
            rows.append({"paper_id": paper, id_key: entity})
        return rows

    _write("authors", author_rows)
    _write("fields", [
        {"field_id": fid, "field_name": name, "field_level": level}
        for fid, name, level in FIELDS
    ])
    _write("institutions", [
        {
            "institution_id": iid, "institution_name": name, "grid_id": grid,
            "url": url, "latitude": lat, "longitude": lon,
        }
        for iid, name, grid, url, lat, lon in INSTITUTIONS
    ])
    _write("papers", paper_rows)
    _write("paper_author_affiliations", affiliation_rows)
    _write("paper_citations", [
        {"citing_paper_id": citing, "cited_paper_id": cited}
        for citing, cited in sorted(edges)
    ])
    _write("paper_fields", field_rows)
    _write("patents", patent_rows)
    _write("paper_patents", links(patent_rows, "patent_id", 10))
    _write("nct", nct_rows)
    _write("paper_nct", links(nct_rows, "nct_id", 8))
    _write("twitter", tweet_rows)
    _write("paper_twitter", links(tweet_rows, "tweet_id", 12))
    _write("newsfeed", news_rows)
    _write("paper_newsfeed", links(news_rows, "newsfeed_id", 7))
    _write("nih", nih_rows)
    _write("paper_nih", links(nih_rows, "nih_project_id", 8))
    _write("nsf", nsf_rows)
    _write("paper_nsf", links(nsf_rows, "nsf_award_id", 7))


if __name__ == "__main__":
    main()
