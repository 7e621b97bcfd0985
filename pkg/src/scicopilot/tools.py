"""Tool registry: descriptors, validated dispatch, and standard bindings.

The descriptor texts are the exact strings the agents see; tests pin their
serialized form so the provider-visible surface cannot drift silently.
Dispatch is total: unknown names, bad arguments, and handler crashes all
come back as failed ToolResults, never as exceptions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .corpus import Corpus, LiteratureQuery, SectionLabel, retrieve, synthesize
from .lake import NA_TEXT, DataLake
from .providers import Provider, ToolCallRequest
from .sandbox import SandboxSession


@dataclass(frozen=True)
class ToolParameter:
    name: str
    kind: str  # "string" or "integer"
    description: str
    required: bool = False
    default: object = None
    allowed: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("string", "integer"):
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.required and self.default is not None:
            raise ValueError(f"required parameter {self.name!r} cannot have a default")
        if self.allowed is not None and self.default is not None:
            if self.default not in self.allowed:
                raise ValueError(
                    f"default {self.default!r} for {self.name!r} violates allowed values"
                )


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    parameters: tuple[ToolParameter, ...] = ()

    def schema(self) -> dict:
        params = []
        for p in self.parameters:
            entry = {
                "name": p.name,
                "type": p.kind,
                "description": p.description,
                "required": p.required,
            }
            if p.default is not None:
                entry["default"] = p.default
            if p.allowed is not None:
                entry["allowed"] = list(p.allowed)
            params.append(entry)
        return {"name": self.name, "description": self.description, "parameters": params}


@dataclass(frozen=True)
class Attachment:
    kind: str  # "file" or "image"
    reference: str
    media_type: str = ""
    data: bytes = b""

    def __post_init__(self):
        if self.kind not in ("file", "image"):
            raise ValueError(f"unknown attachment kind {self.kind!r}")
        if self.kind == "image" and not self.data:
            raise ValueError("image attachments must carry bytes")


@dataclass(frozen=True)
class ToolResult:
    text: str = ""
    attachments: tuple[Attachment, ...] = ()
    ok: bool = True
    error: Optional[str] = None

    def __post_init__(self):
        if self.ok and self.error is not None:
            raise ValueError("successful results carry no error")
        if not self.ok and not self.error:
            raise ValueError("failed results must carry an error message")


def failed(message: str) -> ToolResult:
    return ToolResult(ok=False, error=message)


class ToolRegistry:
    def __init__(self):
        self._tools: dict[str, tuple[ToolDescriptor, Callable]] = {}

    def register(self, descriptor: ToolDescriptor, handler: Callable) -> None:
        if descriptor.name in self._tools:
            raise ValueError(f"tool {descriptor.name!r} is already registered")
        self._tools[descriptor.name] = (descriptor, handler)

    def merge(self, other: "ToolRegistry") -> None:
        for descriptor, handler in other._tools.values():
            self.register(descriptor, handler)

    def get(self, name: str) -> Optional[ToolDescriptor]:
        entry = self._tools.get(name)
        return entry[0] if entry else None

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._tools))

    def schemas(self) -> list[dict]:
        return [self._tools[name][0].schema() for name in self.names()]

    def serialized_schemas(self) -> str:
        """Stable serialization, pinned by a golden file in the tests."""
        return json.dumps(self.schemas(), indent=1, sort_keys=True)

    def _validate(self, descriptor: ToolDescriptor, arguments: Mapping) -> dict:
        known = {p.name for p in descriptor.parameters}
        for name in arguments:
            if name not in known:
                raise ValueError(
                    f"unexpected argument {name!r} for tool {descriptor.name!r}"
                )
        validated = {}
        for p in descriptor.parameters:
            if p.name not in arguments:
                if p.required:
                    raise ValueError(
                        f"missing required argument {p.name!r} for tool {descriptor.name!r}"
                    )
                validated[p.name] = p.default
                continue
            value = arguments[p.name]
            if p.kind == "string" and not isinstance(value, str):
                raise ValueError(f"argument {p.name!r} must be a string")
            if p.kind == "integer" and (isinstance(value, bool) or not isinstance(value, int)):
                raise ValueError(f"argument {p.name!r} must be an integer")
            if p.allowed is not None and value not in p.allowed:
                options = " and ".join(repr(a) for a in p.allowed)
                raise ValueError(
                    f"invalid value {value!r} for {p.name!r}: "
                    f"valid options only include {options}"
                )
            validated[p.name] = value
        return validated

    def dispatch(self, call: ToolCallRequest) -> ToolResult:
        entry = self._tools.get(call.tool_name)
        if entry is None:
            return failed(f"unknown tool: {call.tool_name}")
        descriptor, handler = entry
        try:
            arguments = self._validate(descriptor, call.arguments)
        except ValueError as exc:
            return failed(str(exc))
        try:
            return handler(**arguments)
        except Exception as exc:  # crash containment: failures are values
            return failed(f"{type(exc).__name__}: {exc}")


# -- rendering ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return NA_TEXT
    return str(value)


def render_table(
    columns: Sequence[str],
    rows: Sequence[Sequence],
    total_rows: Optional[int] = None,
) -> str:
    """Markdown pipe table with the transcript-style dimension footer."""
    total = len(rows) if total_rows is None else total_rows
    lines = [
        "| " + " | ".join(columns) + " |",
        "| " + " | ".join(":-----:" for _ in columns) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(_cell(v) for v in row) + " |")
    lines.append("")
    lines.append(f"[{total} rows x {len(columns)} columns]")
    return "\n".join(lines)


def _anchor(url: Optional[str]) -> Optional[str]:
    if url is None:
        return None
    return f'<a href="{url}">{url}</a>'


# -- standard descriptors ----------------------------------------------------

SECTION_VALUES = tuple(s.value for s in SectionLabel)

SEARCH_LITERATURE = ToolDescriptor(
    name="search_literature",
    description=(
        "Performs an advanced semantic search across Science of Science "
        "literature to find relevant papers and sections."
    ),
    parameters=(
        ToolParameter(
            "query", "string",
            "The search query to find relevant papers and sections in the "
            "SciSci literature",
            required=True,
        ),
        ToolParameter(
            "k", "integer",
            "A larger value provides more results",
            default=10,
        ),
        ToolParameter(
            "section", "string",
            "Filter results to only of a specific section (All for all sections)",
            required=True,
            allowed=SECTION_VALUES,
        ),
    ),
)

SQL_LIST_TABLE = ToolDescriptor(
    name="sql_list_table",
    description="List all available tables in the SQL database.",
    parameters=(
        ToolParameter("query", "string", "An empty string.", default=""),
    ),
)

SQL_GET_SCHEMA = ToolDescriptor(
    name="sql_get_schema",
    description="Retrieves detailed schema information and sample rows for specified tables.",
    parameters=(
        ToolParameter(
            "query", "string",
            "A list of table names separated by commas. For example, "
            "`table1, table2, table3`.",
            default="",
        ),
    ),
)

SQL_QUERY = ToolDescriptor(
    name="sql_query",
    description=(
        "Executes a SQL query, returning a preview of the result table and "
        "the file path where the complete result is stored."
    ),
    parameters=(
        ToolParameter(
            "query", "string",
            "A valid SQL query compatible with Google BigQuery dialect.",
            required=True,
        ),
        ToolParameter(
            "display_rows", "integer",
            "The number of rows to display in the preview.",
            default=10,
        ),
    ),
)

NAME_SEARCH = ToolDescriptor(
    name="name_search",
    description=(
        "Searches for and retrieves the closest matches for institution or "
        "field names in the database, for name disambiguation and finding "
        "standardized names."
    ),
    parameters=(
        ToolParameter(
            "column", "string",
            "Specifies the database column to search within. Current valid "
            "options only include field_name and institution_name.",
            required=True,
            allowed=("field_name", "institution_name"),
        ),
        ToolParameter(
            "value", "string",
            "Defines the name to search for within the specified column.",
            required=True,
        ),
    ),
)

PYTHON_TOOL = ToolDescriptor(
    name="python",
    description="Execute Python code in a persistent Jupyter environment.",
    parameters=(
        ToolParameter("query", "string", "Python code snippet to run", required=True),
    ),
)

R_TOOL = ToolDescriptor(
    name="r",
    description="Execute R code in a persistent R environment.",
    parameters=(
        ToolParameter("query", "string", "R code snippet to run", required=True),
    ),
)

JULIA_TOOL = ToolDescriptor(
    name="julia",
    description="Execute Julia code in a persistent Julia environment.",
    parameters=(
        ToolParameter("query", "string", "Julia code snippet to run", required=True),
    ),
)

_SANDBOX_DESCRIPTORS = {"python": PYTHON_TOOL, "r": R_TOOL, "julia": JULIA_TOOL}

_DELEGATION_PARAM = ToolParameter(
    "task", "string",
    "A concise high-level description of the assigned task.",
    required=True,
)

LITERATURE_SPECIALIST = ToolDescriptor(
    name="literature_specialist",
    description=(
        "`literature_specialist` is a specialized agent focused on literature "
        "understanding Science of Science literature. It helps with:\n"
        "1. Locating and retrieving relevant papers from the Science of "
        "Science literature\n"
        "2. Extracting key methodological approaches and findings from papers\n"
        "3. Highlighting implications and applications of existing Science of "
        "Science research\n"
        "Call this agent when the user explicitly asks for the Science of "
        "Science literature.\n"
        "Invoke this tool to assign a task to `consultant`."
    ),
    parameters=(_DELEGATION_PARAM,),
)

DATABASE_SPECIALIST = ToolDescriptor(
    name="database_specialist",
    description=(
        "`database_specialist` is a specialized agent focused on scholarly "
        "data preparation and preprocessing. It helps with:\n"
        "1. Navigate complex scholarly databases\n"
        "2. Identify and extract relevant data segments\n"
        "3. Clean and transform data through preprocessing steps\n"
        "Invoke this tool to assign a task to `dataist`."
    ),
    parameters=(_DELEGATION_PARAM,),
)

ANALYTICS_SPECIALIST = ToolDescriptor(
    name="analytics_specialist",
    description=(
        "`analytics_specialist` is a specialized agent with access to data "
        "analytical tools, including Python and R sandboxes. It helps with: "
        "1. Implementing statistics, modeling, and data analysis "
        "methodologies. 2. Generating visualizations 3. Any other tasks "
        "requires coding. However, `analyst` does not have direct access to "
        "any database. Invoke this tool to assign a task to `analyst`."
    ),
    parameters=(_DELEGATION_PARAM,),
)


# -- bindings ----------------------------------------------------------------


def database_tools(lake: DataLake) -> ToolRegistry:
    registry = ToolRegistry()

    def list_tables(query: str = "") -> ToolResult:
        rows = lake.list_tables()
        lines = [
            "| TableName | TableDescription |",
            "| :-----: | :-----: |",
        ]
        for name, description in rows:
            lines.append(f"| {name} | {description} |")
        return ToolResult(text="\n".join(lines))

    def get_schema(query: str = "") -> ToolResult:
        return ToolResult(text=lake.get_schema(query))

    def run_query(query: str, display_rows: int = 10) -> ToolResult:
        result = lake.run_query(query, display_rows=display_rows)
        table = render_table(result.columns, result.preview, result.total_rows)
        text = f"{table}\n\nComplete result stored at: {result.artifact}"
        attachment = Attachment(kind="file", reference=str(result.artifact),
                                media_type="text/csv")
        return ToolResult(text=text, attachments=(attachment,))

    def search_names(column: str, value: str) -> ToolResult:
        matches = lake.name_search(column, value)
        if not matches:
            return ToolResult(text="No matches found.")
        columns = sorted(matches[0].metadata)
        header = [""] + columns
        rows = []
        for index, match in enumerate(matches):
            record = dict(match.metadata)
            if "url" in record:
                record["url"] = _anchor(record["url"])
            rows.append([index] + [record[c] for c in columns])
        lines = [
            "| " + " | ".join(str(h) for h in header) + " |",
            "| " + " | ".join(":-----:" for _ in header) + " |",
        ]
        for row in rows:
            lines.append("| " + " | ".join(_cell(v) for v in row) + " |")
        return ToolResult(text="\n".join(lines))

    registry.register(SQL_LIST_TABLE, list_tables)
    registry.register(SQL_GET_SCHEMA, get_schema)
    registry.register(SQL_QUERY, run_query)
    registry.register(NAME_SEARCH, search_names)
    return registry


def literature_tools(corpus: Corpus, provider: Optional[Provider] = None) -> ToolRegistry:
    registry = ToolRegistry()

    def search_literature(query: str, k: int, section: str) -> ToolResult:
        q = LiteratureQuery(query=query, k=k, section=SectionLabel(section))
        hits = retrieve(corpus, q, provider)
        result = synthesize(query, hits, provider)
        return ToolResult(text=result.rendered())

    registry.register(SEARCH_LITERATURE, search_literature)
    return registry


def sandbox_tools(sessions: Mapping[str, SandboxSession]) -> ToolRegistry:
    registry = ToolRegistry()
    for runtime in sorted(sessions):
        descriptor = _SANDBOX_DESCRIPTORS.get(runtime)
        if descriptor is None:
            raise ValueError(f"no tool descriptor for runtime {runtime!r}")
        session = sessions[runtime]

        def run_code(query: str, _session: SandboxSession = session) -> ToolResult:
            outcome = _session.exec(query)
            attachments = tuple(
                Attachment(kind="image", reference=img.name,
                           media_type=img.media_type, data=img.data)
                for img in outcome.images
            )
            text = outcome.stdout
            if outcome.stderr and outcome.stderr != outcome.error:
                text = f"{text}\n{outcome.stderr}" if text else outcome.stderr
            if outcome.ok:
                return ToolResult(text=text, attachments=attachments)
            return ToolResult(
                text=text, attachments=attachments, ok=False, error=outcome.error,
            )

        registry.register(descriptor, run_code)
    return registry


def delegation_tools(handlers: Mapping[str, Callable[[str], ToolResult]]) -> ToolRegistry:
    """Bind the three delegation tools to orchestrator-supplied callables."""
    descriptors = {
        "literature_specialist": LITERATURE_SPECIALIST,
        "database_specialist": DATABASE_SPECIALIST,
        "analytics_specialist": ANALYTICS_SPECIALIST,
    }
    registry = ToolRegistry()
    for name, descriptor in descriptors.items():
        if name not in handlers:
            continue
        handler = handlers[name]

        def run_delegation(task: str, _handler=handler) -> ToolResult:
            return _handler(task)

        registry.register(descriptor, run_delegation)
    return registry
