"""Versioned system-prompt assets, one text file per agent or evaluator.

The texts are load-bearing: agents are steered entirely by these prompts
plus their toolsets, so the files are shipped as package data and loaded
by exact name rather than embedded in code.
"""

from __future__ import annotations

from pathlib import Path

_ASSET_DIR = Path(__file__).resolve().parent


def load_prompt(name: str) -> str:
    """Return the prompt asset ``name`` (bare name, no extension)."""
    path = _ASSET_DIR / f"{name}.txt"
    if not path.is_file():
        known = ", ".join(sorted(p.stem for p in _ASSET_DIR.glob("*.txt")))
        raise KeyError(f"unknown prompt asset {name!r}; available: {known}")
    return path.read_text(encoding="utf-8")
