"""Engine configuration: one JSON file wires up a running event.

Relative paths inside the file (the clue corpus) resolve against the config
file's own directory, so a config can travel with its story package.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .clues import ClueCorpus, DEFAULT_THRESHOLD, load_corpus
from .dialogue import DEFAULT_APOLOGY, DEFAULT_HISTORY_ROUNDS, DEFAULT_REFUSAL
from .engine import DEFAULT_DAY_SECONDS
from .filters import FilterList
from .providers import (ChatProvider, DEFAULT_REPLY, HTTPChatProvider,
                        ScriptedProvider, ScriptedRule)


@dataclass(frozen=True)
class EngineConfig:
    filter_keywords: tuple[str, ...] = ()
    refusal_template: str = DEFAULT_REFUSAL
    apology_template: str = DEFAULT_APOLOGY
    history_rounds: int = DEFAULT_HISTORY_ROUNDS
    day_seconds: float = DEFAULT_DAY_SECONDS
    clue_threshold: float = DEFAULT_THRESHOLD
    clue_corpus: str | None = None
    provider: dict = field(default_factory=dict)
    admin_token: str | None = None
    base_dir: Path = Path(".")


def load_engine_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    known = {
        "filter_keywords", "refusal_template", "apology_template",
        "history_rounds", "day_seconds", "clue_threshold", "clue_corpus",
        "provider", "admin_token",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    defaults = EngineConfig()
    return EngineConfig(
        filter_keywords=tuple(raw.get("filter_keywords", ())),
        refusal_template=raw.get("refusal_template", defaults.refusal_template),
        apology_template=raw.get("apology_template", defaults.apology_template),
        history_rounds=int(raw.get("history_rounds", defaults.history_rounds)),
        day_seconds=float(raw.get("day_seconds", defaults.day_seconds)),
        clue_threshold=float(raw.get("clue_threshold", defaults.clue_threshold)),
        clue_corpus=raw.get("clue_corpus"),
        provider=raw.get("provider", {}),
        admin_token=raw.get("admin_token"),
        base_dir=path.parent,
    )


def build_filters(config: EngineConfig) -> FilterList:
    return FilterList.from_words(config.filter_keywords)


def build_corpus(config: EngineConfig) -> ClueCorpus | None:
    if config.clue_corpus is None:
        return None
    corpus_path = Path(config.clue_corpus)
    if not corpus_path.is_absolute():
        corpus_path = config.base_dir / corpus_path
    return load_corpus(corpus_path)


def build_provider(config: EngineConfig) -> ChatProvider:
    options = config.provider
    kind = options.get("kind", "scripted")
    if kind == "scripted":
        rules = tuple(ScriptedRule(r["pattern"], r["reply"])
                      for r in options.get("rules", ()))
        return ScriptedProvider(rules, options.get("default_reply", DEFAULT_REPLY))
    if kind == "http":
        api_key = options.get("api_key")
        env = options.get("api_key_env")
        if api_key is None and env:
            api_key = os.environ.get(env)
        return HTTPChatProvider(options["url"], api_key=api_key,
                                params=options.get("params", {}))
    raise ValueError(f"unknown provider kind {kind!r}")
