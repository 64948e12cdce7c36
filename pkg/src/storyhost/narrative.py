"""Branching live-story domain model: characters, story graphs, release logic.

A story package is an authored graph of daily posts. Warm-up nodes chain
linearly through ``successor``; decision nodes end in emoji-labelled choices
the community votes on; terminal nodes end the story. Everything in this
module is an immutable value — the scheduler engine owns the single mutating
copy of live state and calls back into these pure functions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyFact, PackageFormatError, StoryFinished

PACKAGE_SCHEMA_VERSION = 1


def render_base_prompt(
    name: str,
    personality: str,
    worldview: str,
    canon_facts: Iterable[str] = (),
) -> str:
    """Render the static character prompt. Every input field appears verbatim
    so moderation notes and canonized facts survive untouched."""
    lines = [f"You are {name}.", "", personality, "", f"The world you live in: {worldview}"]
    facts = list(canon_facts)
    if facts:
        lines.append("")
        lines.append("Facts you know to be true:")
        lines.extend(f"- {fact}" for fact in facts)
    return "\n".join(lines)


@dataclass(frozen=True)
class Character:
    name: str
    personality: str
    worldview: str
    canon_facts: tuple[str, ...] = ()
    base_prompt: str = ""

    @classmethod
    def create(
        cls,
        name: str,
        personality: str,
        worldview: str,
        canon_facts: Iterable[str] = (),
    ) -> "Character":
        if not name:
            raise ValueError("character name must be non-empty")
        facts = tuple(canon_facts)
        if len(set(facts)) != len(facts):
            raise ValueError("canon_facts contains duplicate entries")
        return cls(name, personality, worldview, facts,
                   render_base_prompt(name, personality, worldview, facts))


def canonize_fact(character: Character, fact: str) -> Character:
    """Promote a fact (typically one the language model improvised and the
    community adopted) into the character's permanent prompt.

    Idempotent: canonizing an already-present fact returns the character
    unchanged.
    """
    if not fact or not fact.strip():
        raise EmptyFact("cannot canonize an empty fact")
    if fact in character.canon_facts:
        return character
    facts = character.canon_facts + (fact,)
    return replace(
        character,
        canon_facts=facts,
        base_prompt=render_base_prompt(
            character.name, character.personality, character.worldview, facts
        ),
    )


@dataclass(frozen=True)
class Choice:
    index: int
    emoji: str
    caption: str
    target: str


@dataclass(frozen=True)
class StoryNode:
    id: str
    day_index: int
    body: str
    summary: str | None = None
    illustrations: tuple[str, ...] = ()
    choices: tuple[Choice, ...] = ()
    successor: str | None = None
    terminal: bool = False


@dataclass(frozen=True)
class StoryPackage:
    character: Character
    nodes: Mapping[str, StoryNode]
    start: str
    warmup_days: int


@dataclass(frozen=True)
class Defect:
    """One violated package rule, attributed to a node (or the package when
    node is None)."""
    node: str | None
    rule: str
    detail: str

    def __str__(self) -> str:
        where = self.node or "<package>"
        return f"{where}: {self.rule} — {self.detail}"


def validate_package(pkg: StoryPackage) -> list[Defect]:
    """Check every structural invariant of a story package.

    Defects are returned, never raised, so authors get the full list in one
    pass. An empty list means the package is safe to run.
    """
    defects: list[Defect] = []

    ch = pkg.character
    if not ch.name:
        defects.append(Defect(None, "character-name-empty", "character needs a name"))
    if len(set(ch.canon_facts)) != len(ch.canon_facts):
        defects.append(Defect(None, "duplicate-canon-fact",
                              "canon_facts contains repeated entries"))
    for part in (ch.name, ch.personality, *ch.canon_facts):
        if part and part not in ch.base_prompt:
            defects.append(Defect(None, "base-prompt-incomplete",
                                  f"base_prompt is missing {part!r}"))

    if pkg.warmup_days < 0:
        defects.append(Defect(None, "bad-warmup-days", "warmup_days must be >= 0"))

    if pkg.start not in pkg.nodes:
        defects.append(Defect(pkg.start, "missing-start",
                              f"start node {pkg.start!r} does not exist"))

    for node_id, node in pkg.nodes.items():
        if node.day_index < 0:
            defects.append(Defect(node_id, "negative-day-index",
                                  f"day_index {node.day_index} is negative"))

        emojis = [c.emoji for c in node.choices]
        if len(set(emojis)) != len(emojis):
            defects.append(Defect(node_id, "duplicate-emoji",
                                  "choices must carry distinct emoji labels"))
        targets = [c.target for c in node.choices]
        if len(set(targets)) != len(targets):
            defects.append(Defect(node_id, "duplicate-target",
                                  "choices must point at distinct nodes"))
        indices = [c.index for c in node.choices]
        if len(set(indices)) != len(indices):
            defects.append(Defect(node_id, "duplicate-choice-index",
                                  "choice indices must be unique"))
        if any(i < 0 for i in indices):
            defects.append(Defect(node_id, "bad-choice-index",
                                  "choice indices must be >= 0"))
        for choice in node.choices:
            if choice.target not in pkg.nodes:
                defects.append(Defect(node_id, "dangling-target",
                                      f"choice {choice.index} targets missing node "
                                      f"{choice.target!r}"))

        if node.terminal:
            if node.choices:
                defects.append(Defect(node_id, "terminal-with-choices",
                                      "terminal nodes cannot offer choices"))
            if node.successor is not None:
                defects.append(Defect(node_id, "terminal-with-successor",
                                      "terminal nodes cannot have a successor"))
        else:
            if not node.choices and node.successor is None:
                defects.append(Defect(node_id, "missing-successor",
                                      "non-terminal node without choices needs a successor"))
            if node.choices and node.successor is not None:
                defects.append(Defect(node_id, "successor-with-choices",
                                      "a node has either choices or a successor, not both"))
        if node.successor is not None and node.successor not in pkg.nodes:
            defects.append(Defect(node_id, "dangling-successor",
                                  f"successor {node.successor!r} does not exist"))

    if pkg.start in pkg.nodes:
        reachable = _reachable_from(pkg, pkg.start)
        if not any(pkg.nodes[n].terminal for n in reachable):
            defects.append(Defect(pkg.start, "no-reachable-terminal",
                                  "no terminal node is reachable from start"))
        for node_id in _nodes_within_warmup(pkg):
            if pkg.nodes[node_id].choices:
                defects.append(Defect(node_id, "warmup-has-choices",
                                      "warm-up days must not present choices"))

    return defects


def _successor_ids(node: StoryNode) -> list[str]:
    out = [c.target for c in node.choices]
    if node.successor is not None:
        out.append(node.successor)
    return out


def _reachable_from(pkg: StoryPackage, start: str) -> set[str]:
    seen: set[str] = set()
    frontier = [start]
    while frontier:
        node_id = frontier.pop()
        if node_id in seen or node_id not in pkg.nodes:
            continue
        seen.add(node_id)
        frontier.extend(_successor_ids(pkg.nodes[node_id]))
    return seen


def _nodes_within_warmup(pkg: StoryPackage) -> set[str]:
    """Node ids appearing among the first ``warmup_days`` steps of any path
    from start."""
    within: set[str] = set()
    frontier = {pkg.start}
    for _ in range(pkg.warmup_days):
        nxt: set[str] = set()
        for node_id in frontier:
            if node_id not in pkg.nodes:
                continue
            within.add(node_id)
            nxt.update(_successor_ids(pkg.nodes[node_id]))
        frontier = nxt - within
        if not frontier:
            break
    return within


def resolve_branch(node: StoryNode, counts: Mapping[int, int]) -> str:
    """Pick the next node id for a day that just closed.

    Decision nodes follow the choice with the strictly highest vote count;
    ties (including the all-zero tally of a voteless day) break toward the
    lowest choice index. Warm-up nodes simply follow their successor.
    """
    if node.terminal:
        raise StoryFinished(f"node {node.id!r} is terminal")
    if node.choices:
        winner = min(node.choices, key=lambda c: (-counts.get(c.index, 0), c.index))
        return winner.target
    assert node.successor is not None, "validated packages guarantee a successor"
    return node.successor


def story_segment(node: StoryNode) -> str:
    """The text a released node contributes to the growing live-story prompt.
    An authored summary, when present, stands in for the full body."""
    return f"Day {node.day_index}: {node.summary if node.summary else node.body}"


@dataclass(frozen=True)
class StoryState:
    """The released portion of a story plus the prompt text it accumulates."""
    released: tuple[str, ...]
    live_story_prompt: str

    @property
    def current(self) -> str:
        return self.released[-1]

    @classmethod
    def initial(cls, pkg: StoryPackage) -> "StoryState":
        start = pkg.nodes[pkg.start]
        return cls(released=(pkg.start,), live_story_prompt=story_segment(start))


def advance_story(state: StoryState, node: StoryNode) -> StoryState:
    """Release ``node`` (already chosen via ``resolve_branch``) and extend
    the live-story prompt with its segment."""
    return StoryState(
        released=state.released + (node.id,),
        live_story_prompt=state.live_story_prompt + "\n\n" + story_segment(node),
    )


def parse_package(data: dict) -> StoryPackage:
    """Build a StoryPackage from decoded package JSON.

    Shape problems (wrong schema version, missing keys, wrong types) raise
    PackageFormatError; semantic problems (dangling targets, duplicate emoji)
    are left for validate_package so authors see them all at once.
    """
    if not isinstance(data, dict):
        raise PackageFormatError("package document must be a JSON object")
    version = data.get("schema_version")
    if version != PACKAGE_SCHEMA_VERSION:
        raise PackageFormatError(
            f"unsupported schema_version {version!r} (expected {PACKAGE_SCHEMA_VERSION})")
    try:
        ch = data["character"]
        character = Character(
            name=str(ch["name"]),
            personality=str(ch["personality"]),
            worldview=str(ch["worldview"]),
            canon_facts=tuple(str(f) for f in ch.get("canon_facts", [])),
        )
        character = replace(
            character,
            base_prompt=render_base_prompt(
                character.name, character.personality,
                character.worldview, character.canon_facts,
            ),
        )
        nodes: dict[str, StoryNode] = {}
        for node_id, raw in data["nodes"].items():
            choices = tuple(
                Choice(
                    index=int(c.get("index", i)),
                    emoji=str(c["emoji"]),
                    caption=str(c.get("caption", "")),
                    target=str(c["target"]),
                )
                for i, c in enumerate(raw.get("choices", []))
            )
            nodes[str(node_id)] = StoryNode(
                id=str(node_id),
                day_index=int(raw["day_index"]),
                body=str(raw["body"]),
                summary=str(raw["summary"]) if raw.get("summary") is not None else None,
                illustrations=tuple(str(u) for u in raw.get("illustrations", [])),
                choices=choices,
                successor=str(raw["successor"]) if raw.get("successor") is not None else None,
                terminal=bool(raw.get("terminal", False)),
            )
        return StoryPackage(
            character=character,
            nodes=nodes,
            start=str(data["start"]),
            warmup_days=int(data["warmup_days"]),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise PackageFormatError(f"malformed story package: {exc}") from exc


def load_package(path: str | Path) -> StoryPackage:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PackageFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PackageFormatError(f"{path} is not valid JSON: {exc}") from exc
    return parse_package(data)
