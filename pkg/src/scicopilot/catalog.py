"""Catalog of the scholarly data lake: 19 tables and their documentation.

The table and column descriptions below double as user-facing docs (the
``sql_list_table`` / ``sql_get_schema`` tools print them) and as the
validation contract for fixture loading, so they are deliberately plain
data, not ORM models. Embedding columns are derived at load time from their
source text column; fixtures may omit them or leave them blank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    sql_type: str  # INT64 | FLOAT64 | STRING | BOOL | ARRAY<FLOAT64>
    description: str
    not_null: bool = False
    embedding_source: Optional[str] = None  # column this embedding derives from
    references: Optional[tuple[str, str]] = None  # (table, column) foreign key


@dataclass(frozen=True)
class TableSpec:
    name: str
    description: str
    columns: tuple[ColumnSpec, ...]
    primary_key: Optional[str] = None

    def column(self, name: str) -> ColumnSpec:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


def _col(name, sql_type, description, **kw) -> ColumnSpec:
    return ColumnSpec(name, sql_type, description, **kw)


TABLES: tuple[TableSpec, ...] = (
    TableSpec(
        name="authors",
        description="Each author's id, name and gender.",
        primary_key="author_id",
        columns=(
            _col("author_id", "INT64", "(Primary Key) Author Unique Identifier", not_null=True),
            _col("author_name", "STRING", "Author's name"),
            _col("author_gender", "STRING",
                 "Author's gender. Options include 'male', 'female', and 'unknown'."),
        ),
    ),
    TableSpec(
        name="fields",
        description="Each research field's id, name and field level.",
        primary_key="field_id",
        columns=(
            _col("field_id", "INT64", "(Primary Key) A unique identifier for each field",
                 not_null=True),
            _col("field_name", "STRING", "The name of the research field"),
            _col("field_level", "STRING",
                 "The level of the research field, categorizing it as either 'top' or 'sub'"),
        ),
    ),
    TableSpec(
        name="institutions",
        description="Each institution's id, name, webpage url, and geographical coordinate.",
        primary_key="institution_id",
        columns=(
            _col("institution_id", "INT64",
                 "(Primary Key) A unique identifier for each institution.", not_null=True),
            _col("institution_name", "STRING", "Official name of the institution"),
            _col("grid_id", "STRING",
                 "Global Research Identifier Database (GRID) ID of the institution"),
            _col("url", "STRING", "Official webpage URL of the institution"),
            _col("latitude", "FLOAT64", "Geographical latitude of the institution"),
            _col("longitude", "FLOAT64", "Geographical longitude of the institution"),
        ),
    ),
    TableSpec(
        name="nct",
        description="Each clinical trial's id.",
        primary_key="nct_id",
        columns=(
            _col("nct_id", "STRING",
                 "(Primary Key) A unique identifier for each clinical trial", not_null=True),
        ),
    ),
    TableSpec(
        name="newsfeed",
        description="Each newsfeed's id, date and title.",
        primary_key="newsfeed_id",
        columns=(
            _col("newsfeed_id", "STRING",
                 "(Primary Key) A unique identifier for each newsfeed, which is also its URL",
                 not_null=True),
            _col("date", "STRING", "The date of the newsfeed"),
            _col("title", "STRING", "The title of the newsfeed"),
        ),
    ),
    TableSpec(
        name="nih",
        description="Each national institutes of health (NIH) project's id.",
        primary_key="nih_project_id",
        columns=(
            _col("nih_project_id", "STRING",
                 "(Primary Key) A unique identifier for each NIH project", not_null=True),
        ),
    ),
    TableSpec(
        name="nsf",
        description="Each national science foundation (NSF) funding's id, date and title.",
        primary_key="nsf_award_id",
        columns=(
            _col("nsf_award_id", "STRING",
                 "(Primary Key) A unique identifier for each NSF funding", not_null=True),
            _col("date", "STRING", "The date of the NSF award"),
            _col("title", "STRING", "The title of the NSF award"),
        ),
    ),
    TableSpec(
        name="paper_author_affiliations",
        description="Many-to-many-to-many relationships between papers, authors, and their "
                    "affiliated institutions.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("author_id", "INT64", "(Foreign Key) Links to authors", not_null=True,
                 references=("authors", "author_id")),
            _col("institution_id", "INT64", "(Foreign Key) Links to institutions",
                 references=("institutions", "institution_id")),
            _col("author_order", "INT64",
                 "Numeric order representing the author's position in the list of authors "
                 "for the paper", not_null=True),
        ),
    ),
    TableSpec(
        name="paper_citations",
        description="Many-to-many citation relationships between papers.",
        columns=(
            _col("citing_paper_id", "INT64", "(Foreign Key) Links to citing paper",
                 not_null=True, references=("papers", "paper_id")),
            _col("cited_paper_id", "INT64", "(Foreign Key) Links to cited paper",
                 not_null=True, references=("papers", "paper_id")),
        ),
    ),
    TableSpec(
        name="paper_fields",
        description="Many-to-many relationships between papers and their research fields.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("field_id", "INT64", "(Foreign Key) Links to fields", not_null=True,
                 references=("fields", "field_id")),
            _col("is_hit_1pct", "BOOL",
                 "If the paper is in top 1% cited papers within its field and publication year",
                 not_null=True),
            _col("is_hit_5pct", "BOOL",
                 "If the paper is in top 5% cited papers within its field and publication year",
                 not_null=True),
            _col("is_hit_10pct", "BOOL",
                 "If the paper is in top 10% cited papers within its field and publication year",
                 not_null=True),
            _col("normalized_citations", "FLOAT64",
                 "Number of citations normalized by field and year"),
        ),
    ),
    TableSpec(
        name="paper_nct",
        description="Many-to-many relationships between papers and clinical trials.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("nct_id", "STRING", "(Foreign Key) Links to clinical trials", not_null=True,
                 references=("nct", "nct_id")),
        ),
    ),
    TableSpec(
        name="paper_newsfeed",
        description="Many-to-many relationships between papers and newsfeeds.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("newsfeed_id", "STRING", "(Foreign Key) Links to newsfeeds", not_null=True,
                 references=("newsfeed", "newsfeed_id")),
        ),
    ),
    TableSpec(
        name="paper_nih",
        description="Many-to-many relationships between papers and National Institutes of "
                    "Health (NIH) projects.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("nih_project_id", "STRING", "(Foreign Key) Links to NIH projects",
                 not_null=True, references=("nih", "nih_project_id")),
        ),
    ),
    TableSpec(
        name="paper_nsf",
        description="Many-to-many relationships between papers and National Science "
                    "Foundation (NSF) awards.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("nsf_award_id", "STRING", "(Foreign Key) Links to NSF awards", not_null=True,
                 references=("nsf", "nsf_award_id")),
        ),
    ),
    TableSpec(
        name="paper_patents",
        description="Many-to-many relationships between papers and their patent citations.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to cited papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("patent_id", "STRING", "(Foreign Key) Links to citing patents", not_null=True,
                 references=("patents", "patent_id")),
        ),
    ),
    TableSpec(
        name="paper_twitter",
        description="Many-to-many relationships between papers and tweets.",
        columns=(
            _col("paper_id", "INT64", "(Foreign Key) Links to papers", not_null=True,
                 references=("papers", "paper_id")),
            _col("tweet_id", "INT64", "(Foreign Key) Links to tweets", not_null=True,
                 references=("twitter", "tweet_id")),
        ),
    ),
    TableSpec(
        name="papers",
        description="Each paper's id, publication time, authorship, venue, title, impact "
                    "metrics, title, abstract, embeddings, and many other details",
        primary_key="paper_id",
        columns=(
            _col("paper_id", "INT64", "(Primary Key) Paper Unique Identifier"),
            _col("doi", "STRING", "Digital Object Identifier"),
            _col("doc_type", "STRING",
                 "Document type. Options include Conference, Journal, Thesis, Book, "
                 "BookChapter, Repository, Dataset"),
            _col("year", "INT64", "Publication year"),
            _col("date", "STRING", "Publication date"),
            _col("author_count", "INT64", "Number of authors"),
            _col("institution_count", "INT64",
                 "Number of institutions the authors are affiliated with"),
            _col("journal_id", "INT64",
                 "Journal Unique Identifier in which the paper is published, if applicable"),
            _col("journal_name", "STRING", "Journal name"),
            _col("journal_issn", "STRING", "Journal ISSN code"),
            _col("journal_publisher", "STRING", "Journal publisher"),
            _col("journal_url", "STRING", "Journal web URL"),
            _col("conference_id", "INT64", "Conference Unique Identifier, if applicable"),
            _col("conference_abbr_name", "STRING", "Conference abbreviated name"),
            _col("conference_name", "STRING", "Conference name"),
            _col("citation_count", "INT64",
                 "Total number of citations received by the paper"),
            _col("citation_count_pct", "FLOAT64",
                 "The percentile ranking for citation_count, ranging from 0-100"),
            _col("citation_count_10y", "INT64",
                 "Number of citations received within 10 years of publication"),
            _col("citation_count_5y", "INT64",
                 "Number of citations received within 5 years of publication"),
            _col("reference_count", "INT64", "Number of references cited by the paper"),
            _col("disruption_score", "FLOAT64",
                 "Disruption score indicating the paper's impact in displacing prior work in "
                 "its field. Its value spans from -1.0 to 1.0, with higher values indicating "
                 "more disruption"),
            _col("disruption_score_pct", "FLOAT64",
                 "The percentile ranking for disruption_score, ranging from 0-100"),
            _col("novelty_score", "FLOAT64",
                 "Novelty score, based on the top 10 percentile of Z-score of reference "
                 "pairs, representing the paper's atypicality in terms of knowledge "
                 "combination. Lower values indicate higher novelty"),
            _col("novelty_score_pct", "FLOAT64",
                 "The percentile ranking for novelty_score, ranging from 0-100"),
            _col("conventionality_score", "FLOAT64",
                 "Conventionality score, based on the median percentile of Z-score of "
                 "reference pairs, representing the paper's conventionality in terms of "
                 "knowledge combination. Higher values indicate higher conventionality"),
            _col("conventionality_score_pct", "FLOAT64",
                 "The percentile ranking for conventionality_score, ranging from 0-100"),
            _col("title", "STRING", "Paper title"),
            _col("abstract", "STRING", "Paper abstract"),
            _col("abstract_embedding", "ARRAY<FLOAT64>",
                 "Paper abstract embedding. A 768-dimensional dense vector, generated by the "
                 "TEXT_EMBEDDING function, which captures the semantic meaning of the text.",
                 embedding_source="abstract"),
        ),
    ),
    TableSpec(
        name="patents",
        description="Each patent's id, type, date, year, title, abstract, and embeddings.",
        primary_key="patent_id",
        columns=(
            _col("patent_id", "STRING", "(Primary Key) patent Unique Identifier",
                 not_null=True),
            _col("type", "STRING", "The type of patent (e.g. utility)"),
            _col("date", "STRING", "The date the patent was granted"),
            _col("year", "INT64", "The year the patent was granted"),
            _col("title", "STRING", "patent title"),
            _col("abstract", "STRING", "patent abstract"),
            _col("abstract_embedding", "ARRAY<FLOAT64>", "patent abstract embedding",
                 embedding_source="abstract"),
        ),
    ),
    TableSpec(
        name="twitter",
        description="Each tweet's id, date and URL.",
        primary_key="tweet_id",
        columns=(
            _col("tweet_id", "INT64", "(Primary Key) A unique identifier for each tweet",
                 not_null=True),
            _col("date", "STRING", "The date of the tweet"),
            _col("url", "STRING", "The URL of the tweet"),
        ),
    ),
)

#: name -> TableSpec, in alphabetical order of name
CATALOG: dict[str, TableSpec] = {spec.name: spec for spec in sorted(TABLES, key=lambda t: t.name)}

assert len(CATALOG) == 19
