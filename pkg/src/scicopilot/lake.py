"""Embedded scholarly data lake.

An in-process sqlite database loaded from a directory of per-table CSV
files, one `<table>.csv` per catalog table. On top of plain SQL it offers:

- two custom SQL functions, TEXT_EMBEDDING(text) and
  VECTOR_SEARCH(embedding, embedding), so similarity logic can live inside
  queries (embeddings travel as JSON-encoded float arrays);
- query execution that materializes the full result set into a CSV artifact
  (random UUID name, JSON sidecar describing the columns) and returns a
  bounded preview;
- a vector search over embedding columns and an embedding-based name
  disambiguation index for research fields and institutions.

The lake is read-only once loaded: an authorizer rejects any statement that
is not a plain read.
"""

from __future__ import annotations

import csv
import json
import logging
import sqlite3
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .catalog import CATALOG, TableSpec
from .embeddings import EMBEDDING_DIM, cosine_distance, text_embedding
from .metrics import CitationGraph

logger = logging.getLogger(__name__)

#: Placeholder shown for missing values in rendered sample tables.
NA_TEXT = "<NA>"


class LakeError(Exception):
    """Base class for data-lake failures."""


class FixtureLoadError(LakeError):
    """A fixture directory is missing a table or has the wrong columns."""


class IntegrityViolation(LakeError):
    """A foreign key points at a row that does not exist."""


class UnknownTableError(LakeError):
    pass


class QueryExecutionError(LakeError):
    """SQL failed; carries the engine's message verbatim."""


@dataclass
class QueryResult:
    columns: list[str]
    preview: list[tuple]
    total_rows: int
    artifact: Path


@dataclass
class NameMatch:
    entity_id: object
    name: str
    distance: float
    metadata: dict


_SQLITE_TYPES = {
    "INT64": "INTEGER",
    "FLOAT64": "REAL",
    "STRING": "TEXT",
    "BOOL": "INTEGER",
    "ARRAY<FLOAT64>": "TEXT",
}

_TRUE_WORDS = {"true", "1", "t", "yes"}
_FALSE_WORDS = {"false", "0", "f", "no"}

_READ_ACTIONS = {
    sqlite3.SQLITE_SELECT,
    sqlite3.SQLITE_READ,
    sqlite3.SQLITE_FUNCTION,
    sqlite3.SQLITE_RECURSIVE,
}


def _read_only_authorizer(action, *args):
    if action in _READ_ACTIONS:
        return sqlite3.SQLITE_OK
    return sqlite3.SQLITE_DENY


def _sql_text_embedding(text) -> str:
    return json.dumps(text_embedding(text if text is not None else "").tolist())


def _sql_vector_search(a, b) -> float:
    return cosine_distance(_decode_embedding(a), _decode_embedding(b))


def _decode_embedding(value) -> np.ndarray:
    vec = np.asarray(json.loads(value), dtype=np.float64)
    if vec.shape != (EMBEDDING_DIM,):
        raise LakeError(f"embedding has shape {vec.shape}, expected ({EMBEDDING_DIM},)")
    return vec


def _convert_cell(spec_type: str, raw: str):
    if raw == "":
        return None
    if spec_type == "INT64":
        return int(raw)
    if spec_type == "FLOAT64":
        return float(raw)
    if spec_type == "BOOL":
        word = raw.strip().lower()
        if word in _TRUE_WORDS:
            return 1
        if word in _FALSE_WORDS:
            return 0
        raise ValueError(f"{raw!r} is not a boolean")
    return raw


class DataLake:
    """One loaded dataset plus its artifact directory."""

    def __init__(
        self,
        conn: sqlite3.Connection,
        artifact_dir: Path,
        namer: Optional[Callable[[], str]] = None,
    ):
        self._conn = conn
        self.artifact_dir = Path(artifact_dir)
        self.artifact_dir.mkdir(parents=True, exist_ok=True)
        self._name_indexes: dict[str, list] = {}
        # Artifact stems default to random; replay harnesses inject a counter
        # so consecutive runs produce identical result paths.
        self._namer = namer or (lambda: str(uuid.uuid4()))

    # -- loading -------------------------------------------------------------

    @classmethod
    def load_fixture(
        cls,
        path: Path,
        artifact_dir: Optional[Path] = None,
        namer: Optional[Callable[[], str]] = None,
    ) -> "DataLake":
        """Load every catalog table from ``path`` and validate foreign keys.

        Each table comes from ``<name>.csv`` with a header row. Embedding
        columns may be omitted or left blank; blank ones are derived from
        their source text column with the deterministic embedder.
        """
        path = Path(path)
        if not path.is_dir():
            raise FixtureLoadError(f"fixture directory {path} does not exist")
        conn = sqlite3.connect(":memory:")
        conn.create_function("TEXT_EMBEDDING", 1, _sql_text_embedding, deterministic=True)
        conn.create_function("VECTOR_SEARCH", 2, _sql_vector_search, deterministic=True)

        for spec in CATALOG.values():
            csv_path = path / f"{spec.name}.csv"
            if not csv_path.exists():
                raise FixtureLoadError(f"fixture is missing table file {spec.name}.csv")
            cls._load_table(conn, spec, csv_path)

        cls._check_foreign_keys(conn)
        conn.set_authorizer(_read_only_authorizer)
        lake = cls(conn, artifact_dir or Path("artifacts"), namer=namer)
        return lake

    @staticmethod
    def _load_table(conn: sqlite3.Connection, spec: TableSpec, csv_path: Path) -> None:
        columns_sql = ", ".join(
            f'"{c.name}" {_SQLITE_TYPES[c.sql_type]}' for c in spec.columns
        )
        conn.execute(f'CREATE TABLE "{spec.name}" ({columns_sql})')

        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            expected = set(spec.column_names)
            derivable = {c.name for c in spec.columns if c.embedding_source}
            missing = expected - header - derivable
            unexpected = header - expected
            if missing or unexpected:
                raise FixtureLoadError(
                    f"table {spec.name}: column mismatch"
                    + (f", missing {sorted(missing)}" if missing else "")
                    + (f", unexpected {sorted(unexpected)}" if unexpected else "")
                )

            placeholders = ", ".join("?" for _ in spec.columns)
            insert = f'INSERT INTO "{spec.name}" VALUES ({placeholders})'
            for line_no, row in enumerate(reader, start=2):
                values = []
                for col in spec.columns:
                    raw = row.get(col.name) or ""
                    if col.embedding_source and not raw:
                        source_text = row.get(col.embedding_source) or ""
                        values.append(_sql_text_embedding(source_text))
                        continue
                    try:
                        value = _convert_cell(col.sql_type, raw)
                    except ValueError as exc:
                        raise FixtureLoadError(
                            f"table {spec.name}, line {line_no}, column {col.name}: {exc}"
                        ) from exc
                    if value is None and col.not_null:
                        raise FixtureLoadError(
                            f"table {spec.name}, line {line_no}: {col.name} must not be null"
                        )
                    if col.sql_type == "ARRAY<FLOAT64>" and value is not None:
                        _decode_embedding(value)  # dimension check
                    values.append(value)
                conn.execute(insert, values)
        conn.commit()

    @staticmethod
    def _check_foreign_keys(conn: sqlite3.Connection) -> None:
        for spec in CATALOG.values():
            for col in spec.columns:
                if col.references is None:
                    continue
                ref_table, ref_col = col.references
                cur = conn.execute(
                    f'SELECT t."{col.name}" FROM "{spec.name}" t '
                    f'LEFT JOIN "{ref_table}" r ON t."{col.name}" = r."{ref_col}" '
                    f'WHERE t."{col.name}" IS NOT NULL AND r."{ref_col}" IS NULL LIMIT 1'
                )
                dangling = cur.fetchone()
                if dangling is not None:
                    raise IntegrityViolation(
                        f"{spec.name}.{col.name} = {dangling[0]!r} has no match in "
                        f"{ref_table}.{ref_col}"
                    )

    # -- catalog -------------------------------------------------------------

    def list_tables(self) -> list[tuple[str, str]]:
        """All (name, description) pairs, alphabetical by name."""
        return [(spec.name, spec.description) for spec in CATALOG.values()]

    def get_schema(self, names: str = "") -> str:
        """Schema text plus up to 3 sample rows for the requested tables.

        ``names`` is comma-separated; empty means every table.
        """
        requested = [n.strip() for n in names.split(",") if n.strip()]
        if not requested:
            requested = list(CATALOG)
        unknown = [n for n in requested if n not in CATALOG]
        if unknown:
            raise UnknownTableError(f"unknown tables: {', '.join(unknown)}")
        return "\n\n".join(self._schema_block(CATALOG[n]) for n in requested)

    def _schema_block(self, spec: TableSpec) -> str:
        lines = [f"CREATE TABLE `{spec.name}` ("]
        for i, col in enumerate(spec.columns):
            quoted = (
                f'"{col.description}"' if "'" in col.description
                else f"'{col.description}'"
            )
            not_null = " NOT NULL" if col.not_null else ""
            comma = "," if i < len(spec.columns) - 1 else ""
            lines.append(
                f"  `{col.name}` {col.sql_type}{not_null} OPTIONS(description={quoted}){comma}"
            )
        table_quoted = (
            f'"{spec.description}"' if "'" in spec.description else f"'{spec.description}'"
        )
        lines.append(f") OPTIONS(description={table_quoted})")

        order_by = (
            f'"{spec.primary_key}"' if spec.primary_key
            else ", ".join(f'"{c}"' for c in spec.column_names)
        )
        cur = self._conn.execute(
            f'SELECT * FROM "{spec.name}" ORDER BY {order_by} LIMIT 3'
        )
        rows = cur.fetchall()
        rendered = [
            "/*",
            f"{len(rows)} rows from {spec.name} table:",
            "\t".join(spec.column_names),
        ]
        for row in rows:
            cells = []
            for col, value in zip(spec.columns, row):
                if value is None:
                    cells.append(NA_TEXT)
                elif col.sql_type == "ARRAY<FLOAT64>":
                    cells.append(f"[{EMBEDDING_DIM} floats]")
                else:
                    cells.append(str(value))
            rendered.append("\t".join(cells))
        rendered.append("")
        rendered.append(f"[{len(rows)} rows x {len(spec.columns)} columns]")
        rendered.append("*/")
        return "\n".join(lines) + "\n\n" + "\n".join(rendered)

    # -- queries -------------------------------------------------------------

    def run_query(self, sql: str, display_rows: int = 10) -> QueryResult:
        """Execute a read-only query; full result goes to a CSV artifact.

        The preview is the first ``display_rows`` rows of the artifact.
        """
        if not isinstance(display_rows, int) or display_rows < 1:
            raise LakeError(f"display_rows must be a positive integer, got {display_rows!r}")
        try:
            cur = self._conn.execute(sql)
        except sqlite3.Error as exc:
            raise QueryExecutionError(str(exc)) from exc
        columns = [d[0] for d in cur.description] if cur.description else []
        rows = cur.fetchall()

        artifact = self.artifact_dir / f"{self._namer()}.csv"
        with open(artifact, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(["" if v is None else v for v in row])
        sidecar = artifact.with_suffix(".json")
        sidecar.write_text(json.dumps({
            "columns": [
                {"name": name, "type": _infer_column_type(rows, idx)}
                for idx, name in enumerate(columns)
            ],
            "total_rows": len(rows),
        }, indent=2))

        return QueryResult(
            columns=columns,
            preview=rows[:display_rows],
            total_rows=len(rows),
            artifact=artifact,
        )

    # -- similarity ----------------------------------------------------------

    def vector_search(
        self,
        table: str,
        column: str,
        query: "str | np.ndarray",
        top_k: int,
    ) -> list[dict]:
        """Rows of ``table`` nearest to ``query`` by cosine distance.

        ``query`` may be raw text (embedded here) or an embedding vector.
        Ties break by ascending primary key. Returns row dicts with an
        added ``distance`` key.
        """
        if table not in CATALOG:
            raise UnknownTableError(f"unknown table: {table}")
        spec = CATALOG[table]
        try:
            col = spec.column(column)
        except KeyError:
            raise LakeError(f"table {table} has no column {column}") from None
        if col.sql_type != "ARRAY<FLOAT64>":
            raise LakeError(f"{table}.{column} is not an embedding column")
        if top_k < 1:
            raise LakeError("top_k must be positive")
        if isinstance(query, str):
            query = text_embedding(query)

        cur = self._conn.execute(f'SELECT * FROM "{table}"')
        names = [d[0] for d in cur.description]
        emb_idx = names.index(column)
        pk_idx = names.index(spec.primary_key)
        scored = []
        for row in cur.fetchall():
            if row[emb_idx] is None:
                continue
            dist = cosine_distance(_decode_embedding(row[emb_idx]), query)
            scored.append((dist, row[pk_idx], row))
        scored.sort(key=lambda item: (item[0], item[1]))
        results = []
        for dist, _pk, row in scored[:top_k]:
            record = dict(zip(names, row))
            record["distance"] = dist
            results.append(record)
        return results

    # -- name disambiguation ---------------------------------------------------

    _NAME_COLUMNS = {
        "field_name": ("fields", "field_id"),
        "institution_name": ("institutions", "institution_id"),
    }

    def name_search(self, column: str, value: str) -> list[NameMatch]:
        """Top-10 closest names from the fields or institutions index.

        An exact (case-insensitive) match always ranks first; the rest
        order by embedding distance, then by entity id.
        """
        if column not in self._NAME_COLUMNS:
            raise LakeError(
                f"invalid column {column!r}: valid options only include "
                f"'field_name' and 'institution_name'"
            )
        index = self._name_index(column)
        query_vec = text_embedding(value)
        wanted = value.strip().lower()
        scored = []
        for entity_id, name, vec, metadata in index:
            exact = 0 if name.strip().lower() == wanted else 1
            scored.append((exact, cosine_distance(vec, query_vec), entity_id, name, metadata))
        scored.sort(key=lambda item: (item[0], item[1], item[2]))
        return [
            NameMatch(entity_id=eid, name=name, distance=dist, metadata=meta)
            for _exact, dist, eid, name, meta in scored[:10]
        ]

    def _name_index(self, column: str):
        if column not in self._name_indexes:
            table, id_col = self._NAME_COLUMNS[column]
            cur = self._conn.execute(f'SELECT * FROM "{table}"')
            names = [d[0] for d in cur.description]
            entries = []
            for row in cur.fetchall():
                record = dict(zip(names, row))
                name = record[column]
                if name is None:
                    continue
                entries.append((record[id_col], name, text_embedding(name), record))
            self._name_indexes[column] = entries
        return self._name_indexes[column]

    # -- bridges ---------------------------------------------------------------

    def citation_graph(self) -> CitationGraph:
        """Project papers/paper_citations into a CitationGraph.

        Papers without a year are left out (and their edges with them).
        """
        years = {
            pid: year
            for pid, year in self._conn.execute("SELECT paper_id, year FROM papers")
            if year is not None
        }
        edges = {
            (citing, cited)
            for citing, cited in self._conn.execute(
                "SELECT citing_paper_id, cited_paper_id FROM paper_citations"
            )
            if citing in years and cited in years
        }
        return CitationGraph(years=years, edges=edges)

    def close(self) -> None:
        self._conn.close()


def _infer_column_type(rows: list[tuple], idx: int) -> str:
    for row in rows:
        value = row[idx]
        if value is None:
            continue
        if isinstance(value, int):
            return "INT64"
        if isinstance(value, float):
            return "FLOAT64"
        return "STRING"
    return "UNKNOWN"
