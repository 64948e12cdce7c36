"""Daily voting: one live decision window per story day.

A DayState is an immutable snapshot of the open day — the node on display,
when the window opened and closes, and the latest vote per user. Casting a
vote returns a new DayState; a user voting twice keeps only their most
recent choice.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping

from .errors import InvalidChoice, VotingClosed
from .narrative import StoryNode


@dataclass(frozen=True)
class Tally:
    counts: Mapping[int, int]
    voters: int

    def winner(self) -> int | None:
        if not self.counts:
            return None
        return min(self.counts, key=lambda i: (-self.counts[i], i))


@dataclass(frozen=True)
class DayState:
    day_index: int
    node_id: str
    choice_indices: tuple[int, ...]
    opened_at: float
    closes_at: float
    votes: Mapping[str, int]  # user_id -> latest choice index

    @classmethod
    def open(cls, node: StoryNode, opened_at: float, duration: float) -> DayState:
        return cls(
            day_index=node.day_index,
            node_id=node.id,
            choice_indices=tuple(c.index for c in node.choices),
            opened_at=opened_at,
            closes_at=opened_at + duration,
            votes=MappingProxyType({}),
        )

    @property
    def has_choices(self) -> bool:
        return bool(self.choice_indices)


def cast_vote(day: DayState, user_id: str, choice_index: int, now: float) -> DayState:
    """Record ``user_id``'s latest choice; closed windows and unknown
    choice indices are rejected."""
    if now >= day.closes_at:
        raise VotingClosed(f"voting for day {day.day_index} closed at {day.closes_at}")
    if choice_index not in day.choice_indices:
        raise InvalidChoice(
            f"choice {choice_index} is not offered on day {day.day_index}")
    votes = dict(day.votes)
    votes[user_id] = choice_index
    return replace(day, votes=MappingProxyType(votes))


def tally_votes(day: DayState) -> Tally:
    counts: dict[int, int] = {i: 0 for i in day.choice_indices}
    for choice in day.votes.values():
        counts[choice] += 1
    return Tally(counts=MappingProxyType(counts), voters=len(day.votes))
