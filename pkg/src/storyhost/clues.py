"""Static-reply lookup: match a sentence against a small lore corpus by
embedding similarity and answer with pre-written text (and optionally an
image) instead of calling the language model.

Two embedding backends share one interface:

* ``TrigramHashEmbedder`` — offline, deterministic: hashed character
  trigrams, L2-normalized, fixed dimension 256. Used by default and by every
  test.
* ``HTTPEmbeddingBackend`` — delegates to a remote sentence-embedding
  service for production-quality similarity.

Corpus embeddings are computed once at load; queries only embed the incoming
sentence.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from .errors import InvalidVector, ProviderUnavailable

OFFLINE_DIMENSION = 256
DEFAULT_THRESHOLD = 0.6


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise InvalidVector(f"dimension mismatch: {len(a)} vs {len(b)}")
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(a, b):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        raise InvalidVector("cosine similarity is undefined for a zero vector")
    return dot / math.sqrt(norm_a * norm_b)


class EmbeddingBackend(Protocol):
    dimension: int

    def embed(self, text: str) -> tuple[float, ...]: ...


class TrigramHashEmbedder:
    """Character-trigram hashing embedder.

    The text is lowercased, whitespace-collapsed, and padded with one space
    on each side; every 3-gram is hashed (crc32) into one of ``dimension``
    buckets; the count vector is L2-normalized. Identical text always yields
    the identical unit vector.
    """

    def __init__(self, dimension: int = OFFLINE_DIMENSION):
        self.dimension = dimension

    def embed(self, text: str) -> tuple[float, ...]:
        if not text or not text.strip():
            raise InvalidVector("cannot embed empty text")
        normalized = " ".join(text.lower().split())
        padded = f" {normalized} "
        counts = [0.0] * self.dimension
        for i in range(len(padded) - 2):
            gram = padded[i:i + 3]
            counts[zlib.crc32(gram.encode("utf-8")) % self.dimension] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        return tuple(c / norm for c in counts)


class HTTPEmbeddingBackend:
    """Remote embedding service speaking ``POST url {"text": ...} ->
    {"vector": [...]}``."""

    def __init__(self, url: str, *, api_key: str | None = None,
                 dimension: int = 0, timeout: float = 10.0):
        self.url = url
        self.api_key = api_key
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, text: str) -> tuple[float, ...]:
        if not text or not text.strip():
            raise InvalidVector("cannot embed empty text")
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(self.url, json={"text": text},
                              headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            vector = tuple(float(x) for x in resp.json()["vector"])
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"embedding service failed: {exc}") from exc
        if not self.dimension:
            self.dimension = len(vector)
        return vector


@dataclass(frozen=True)
class ClueEntry:
    id: str
    keyword: str
    reply_text: str
    image_url: str | None = None


@dataclass(frozen=True)
class ClueMatch:
    entry: ClueEntry
    score: float


class ClueCorpus:
    """Entries plus their cached keyword embeddings; read-only after load."""

    def __init__(self, entries: Sequence[ClueEntry],
                 backend: EmbeddingBackend | None = None):
        for entry in entries:
            if not entry.keyword or not entry.reply_text:
                raise ValueError(f"clue {entry.id!r} needs a keyword and reply_text")
        self.backend = backend if backend is not None else TrigramHashEmbedder()
        self.entries = tuple(entries)
        self._vectors = tuple(self.backend.embed(e.keyword) for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def find(self, sentence: str, threshold: float = DEFAULT_THRESHOLD) -> ClueMatch | None:
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must be within [0, 1], got {threshold}")
        if not self.entries:
            return None
        query = self.backend.embed(sentence)
        scores = [cosine_similarity(query, vec) for vec in self._vectors]
        best = max(range(len(scores)), key=lambda i: scores[i])  # ties keep corpus order
        if scores[best] >= threshold:
            return ClueMatch(entry=self.entries[best], score=scores[best])
        return None


def find_clue(sentence: str, corpus: ClueCorpus | Sequence[ClueEntry],
              threshold: float = DEFAULT_THRESHOLD,
              backend: EmbeddingBackend | None = None) -> ClueMatch | None:
    if not isinstance(corpus, ClueCorpus):
        corpus = ClueCorpus(corpus, backend=backend)
    return corpus.find(sentence, threshold)


def parse_corpus(data: list) -> list[ClueEntry]:
    if not isinstance(data, list):
        raise ValueError("clue corpus must be a JSON list")
    entries = []
    for i, raw in enumerate(data):
        entries.append(ClueEntry(
            id=str(raw.get("id", f"clue-{i}")),
            keyword=str(raw["keyword"]),
            reply_text=str(raw["reply_text"]),
            image_url=str(raw["image_url"]) if raw.get("image_url") is not None else None,
        ))
    return entries


def load_corpus(path: str | Path, backend: EmbeddingBackend | None = None) -> ClueCorpus:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ClueCorpus(parse_corpus(data), backend=backend)
