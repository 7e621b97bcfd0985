"""Deterministic text embeddings.

A live embedding model would make every test depend on a network call, so
the default embedder is a seeded feature hash: character trigrams and word
tokens of the lowercased input are hashed (keyed blake2b, so the mapping is
stable across processes and platforms), each gram bumps one of 768 buckets
up or down, and the result is L2-normalized. Similar strings share grams and
therefore land near each other, which is all the retrieval and
name-disambiguation layers need. A real provider can be swapped in behind
the same one-function interface.
"""

from __future__ import annotations

import re
from hashlib import blake2b

import numpy as np

EMBEDDING_DIM = 768

_HASH_KEY = b"scicopilot-embedding-v1"

_WORD_RE = re.compile(r"\w+")


def _grams(text: str):
    lowered = " ".join(text.lower().split())
    if not lowered:
        return
    yield from _WORD_RE.findall(lowered)
    padded = f" {lowered} "
    for i in range(len(padded) - 2):
        yield padded[i:i + 3]


def text_embedding(text: str) -> np.ndarray:
    """Embed ``text`` as a unit-norm 768-dimensional vector.

    Pure function: equal inputs give bit-equal vectors. The empty string is
    allowed and maps to a fixed vector.
    """
    vec = np.zeros(EMBEDDING_DIM, dtype=np.float64)
    for gram in _grams(text):
        digest = blake2b(gram.encode("utf-8"), digest_size=9, key=_HASH_KEY).digest()
        index = int.from_bytes(digest[:8], "big") % EMBEDDING_DIM
        sign = 1.0 if digest[8] & 1 else -1.0
        vec[index] += sign
    if not vec.any():
        # empty or fully cancelled input: fall back to a constant direction
        vec[0] = 1.0
    return vec / np.linalg.norm(vec)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        raise ValueError("cosine similarity of a zero vector")
    return float(np.dot(a, b) / denom)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    # floor at zero so an exact match never reports -0.0 from rounding
    return max(0.0, 1.0 - cosine_similarity(a, b))
