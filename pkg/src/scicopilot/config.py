"""Environment-driven runtime settings.

Everything the service layer needs to find on disk or on the network comes
through here: SESSION_DIR (event logs), ARTIFACT_DIR (query results and
figures), DATA_LAKE_PATH (fixture directory), PROVIDER_ENDPOINT and
PROVIDER_KEY (live model access, optional).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

_PACKAGE_ROOT = Path(__file__).resolve().parent

#: Directory of the packaged standard fixture (19 CSV tables).
STANDARD_FIXTURE = _PACKAGE_ROOT / "fixtures" / "standard"

#: Packaged replay of the Harvard collaboration case study.
CASE1_DIR = _PACKAGE_ROOT / "fixtures" / "case1"
CASE1_SCRIPT = CASE1_DIR / "script.jsonl"
CASE1_QUESTION = CASE1_DIR / "question.txt"
CASE1_GOLDEN_KINDS = CASE1_DIR / "golden_event_kinds.txt"


@dataclass(frozen=True)
class Settings:
    session_dir: Path
    artifact_dir: Path
    data_lake_path: Path
    provider_endpoint: Optional[str]
    provider_key: Optional[str]


def get_settings() -> Settings:
    """Read settings from the environment; unset values get local defaults."""
    return Settings(
        session_dir=Path(os.environ.get("SESSION_DIR", "sessions")),
        artifact_dir=Path(os.environ.get("ARTIFACT_DIR", "artifacts")),
        data_lake_path=Path(os.environ.get("DATA_LAKE_PATH", str(STANDARD_FIXTURE))),
        provider_endpoint=os.environ.get("PROVIDER_ENDPOINT"),
        provider_key=os.environ.get("PROVIDER_KEY"),
    )
