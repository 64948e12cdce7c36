"""Keyword moderation filter applied to both inbound messages and character
replies.

Matching is case-insensitive and anchored at word boundaries, so a banned
"crap" does not block "scrapbook". Multi-word phrases are matched as written.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class FilterResult:
    blocked: bool
    keyword: str | None = None


@dataclass(frozen=True)
class FilterList:
    keywords: tuple[str, ...]
    _patterns: tuple[re.Pattern, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "FilterList":
        normalized = []
        for word in words:
            w = word.strip().lower()
            if not w:
                raise ValueError("filter keywords must be non-empty")
            normalized.append(w)
        keywords = tuple(normalized)
        patterns = tuple(
            re.compile(rf"(?<!\w){re.escape(kw)}(?!\w)", re.IGNORECASE)
            for kw in keywords
        )
        return cls(keywords=keywords, _patterns=patterns)


def filter_text(text: str, filters: FilterList) -> FilterResult:
    """Blocked iff any keyword occurs in ``text`` at word boundaries; the
    first matching keyword in list order is reported."""
    for keyword, pattern in zip(filters.keywords, filters._patterns):
        if pattern.search(text):
            return FilterResult(blocked=True, keyword=keyword)
    return FilterResult(blocked=False)
