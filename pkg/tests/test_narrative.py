from __future__ import annotations

import json

import pytest

from storyhost.errors import EmptyFact, PackageFormatError, StoryFinished
from storyhost.narrative import (Character, Choice, StoryNode, StoryPackage,
                                 StoryState, advance_story, canonize_fact,
                                 load_package, parse_package, resolve_branch,
                                 story_segment, validate_package)

from conftest import make_character, make_package


# -- character / base prompt -------------------------------------------------

def test_base_prompt_contains_every_field():
    ch = Character.create("Mira", "Stubborn and kind.", "A city on stilts.",
                          ["The tide never stops rising."])
    for part in ("Mira", "Stubborn and kind.", "A city on stilts.",
                 "The tide never stops rising."):
        assert part in ch.base_prompt


def test_character_requires_name():
    with pytest.raises(ValueError):
        Character.create("", "p", "w")


def test_canonize_appends_and_rerenders():
    ch = make_character()
    updated = canonize_fact(ch, "The harbor master owes her a favor.")
    assert updated.canon_facts[-1] == "The harbor master owes her a favor."
    assert "The harbor master owes her a favor." in updated.base_prompt
    assert "harbor master" not in ch.base_prompt  # original untouched


def test_canonize_is_idempotent():
    ch = canonize_fact(make_character(), "Fact one.")
    again = canonize_fact(ch, "Fact one.")
    assert again == ch
    assert again.canon_facts.count("Fact one.") == 1


def test_canonize_rejects_blank():
    with pytest.raises(EmptyFact):
        canonize_fact(make_character(), "   ")


# -- branch resolution ---------------------------------------------------------

def _decision_node() -> StoryNode:
    return StoryNode(id="d", day_index=1, body="?", choices=(
        Choice(0, "🅰️", "a", "ta"),
        Choice(1, "🅱️", "b", "tb"),
        Choice(2, "🆎", "c", "tc"),
    ))


def test_resolve_branch_follows_highest_count():
    assert resolve_branch(_decision_node(), {0: 2, 1: 5, 2: 1}) == "tb"


def test_resolve_branch_tie_breaks_to_lowest_index():
    assert resolve_branch(_decision_node(), {0: 3, 1: 3, 2: 3}) == "ta"
    assert resolve_branch(_decision_node(), {1: 4, 2: 4}) == "tb"


def test_resolve_branch_empty_tally_picks_index_zero():
    assert resolve_branch(_decision_node(), {}) == "ta"


def test_resolve_branch_warmup_follows_successor():
    node = StoryNode(id="w", day_index=0, body=".", successor="next")
    assert resolve_branch(node, {}) == "next"


def test_resolve_branch_terminal_raises():
    node = StoryNode(id="t", day_index=3, body=".", terminal=True)
    with pytest.raises(StoryFinished):
        resolve_branch(node, {})


# -- story state ---------------------------------------------------------------

def test_story_state_accumulates_segments():
    pkg = make_package()
    state = StoryState.initial(pkg)
    assert state.released == ("n0",)
    assert state.live_story_prompt == story_segment(pkg.nodes["n0"])
    state = advance_story(state, pkg.nodes["n1"])
    assert state.released == ("n0", "n1")
    assert state.live_story_prompt.endswith(story_segment(pkg.nodes["n1"]))
    assert state.current == "n1"


def test_story_segment_prefers_summary():
    node = StoryNode(id="x", day_index=2, body="Long body.", summary="Short.")
    assert story_segment(node) == "Day 2: Short."
    bare = StoryNode(id="y", day_index=0, body="Only body.")
    assert story_segment(bare) == "Day 0: Only body."


# -- validation ------------------------------------------------------------------

def _package_with(nodes: dict[str, StoryNode], start="n0", warmup_days=0) -> StoryPackage:
    return StoryPackage(character=make_character(), nodes=nodes, start=start,
                        warmup_days=warmup_days)


def _rules(pkg: StoryPackage) -> set[str]:
    return {d.rule for d in validate_package(pkg)}


def test_valid_package_has_no_defects():
    assert validate_package(make_package()) == []


def test_dangling_target_detected():
    nodes = {
        "n0": StoryNode(id="n0", day_index=0, body=".", choices=(
            Choice(0, "🅰️", "a", "missing"),
            Choice(1, "🅱️", "b", "end"),
        )),
        "end": StoryNode(id="end", day_index=1, body=".", terminal=True),
    }
    assert "dangling-target" in _rules(_package_with(nodes))


def test_duplicate_emoji_detected():
    nodes = {
        "n0": StoryNode(id="n0", day_index=0, body=".", choices=(
            Choice(0, "🅰️", "a", "end"),
            Choice(1, "🅰️", "b", "end2"),
        )),
        "end": StoryNode(id="end", day_index=1, body=".", terminal=True),
        "end2": StoryNode(id="end2", day_index=1, body=".", terminal=True),
    }
    assert "duplicate-emoji" in _rules(_package_with(nodes))


def test_warmup_node_with_choices_detected():
    pkg = make_package(warmup_days=2)  # decision node n1 now falls in warm-up
    assert "warmup-has-choices" in _rules(pkg)


def test_unreachable_terminal_detected():
    nodes = {
        "n0": StoryNode(id="n0", day_index=0, body=".", successor="n1"),
        "n1": StoryNode(id="n1", day_index=1, body=".", successor="n0"),
        "end": StoryNode(id="end", day_index=2, body=".", terminal=True),
    }
    assert "no-reachable-terminal" in _rules(_package_with(nodes))


def test_terminal_with_choices_detected():
    nodes = {
        "n0": StoryNode(id="n0", day_index=0, body=".", terminal=True, choices=(
            Choice(0, "🅰️", "a", "n0"),
        )),
    }
    assert "terminal-with-choices" in _rules(_package_with(nodes))


def test_node_needs_successor_or_choices():
    nodes = {"n0": StoryNode(id="n0", day_index=0, body=".")}
    rules = _rules(_package_with(nodes))
    assert "missing-successor" in rules
    assert "no-reachable-terminal" in rules


def test_missing_start_detected():
    nodes = {"end": StoryNode(id="end", day_index=0, body=".", terminal=True)}
    assert "missing-start" in _rules(_package_with(nodes, start="nope"))


def test_shipped_packages_are_clean(catherine_package, david_package):
    assert validate_package(catherine_package) == []
    assert validate_package(david_package) == []


def test_catherine_package_shape(catherine_package):
    pkg = catherine_package
    assert pkg.warmup_days == 1
    start = pkg.nodes[pkg.start]
    assert start.day_index == 0 and not start.choices
    decision_days = sorted({n.day_index for n in pkg.nodes.values() if n.choices})
    assert decision_days == [1, 2, 3]
    assert all(n.day_index == 4 for n in pkg.nodes.values() if n.terminal)


def test_david_package_shape(david_package):
    pkg = david_package
    assert pkg.warmup_days == 3
    warmups = [n for n in pkg.nodes.values() if n.successor]
    assert {n.day_index for n in warmups} == {0, 1, 2}
    assert sorted({n.day_index for n in pkg.nodes.values() if n.choices}) == [3, 4, 5]


# -- parsing ------------------------------------------------------------------------

def test_parse_rejects_wrong_schema_version():
    with pytest.raises(PackageFormatError):
        parse_package({"schema_version": 99, "character": {}, "nodes": {},
                       "start": "x", "warmup_days": 0})


def test_parse_rejects_missing_keys():
    with pytest.raises(PackageFormatError):
        parse_package({"schema_version": 1})


def test_load_package_wraps_bad_json(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(PackageFormatError):
        load_package(bad)
    with pytest.raises(PackageFormatError):
        load_package(tmp_path / "does-not-exist.json")


def test_parse_roundtrips_shipped_file(stories_dir):
    raw = json.loads((stories_dir / "catherine.story.json").read_text(encoding="utf-8"))
    pkg = parse_package(raw)
    assert pkg.start == "c0"
    assert pkg.nodes["c1"].choices[0].emoji == "🔌"
    assert pkg.character.name == "Catherine"
