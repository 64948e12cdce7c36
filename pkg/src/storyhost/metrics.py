"""Engagement statistics derived from an event log.

All figures are computed from the raw records, never from live state, so a
replayed or truncated log yields honest numbers. "Messages" counts inbound
community chat only; votes are tracked separately, and the combined figure
is reported as ``total_interactions`` since communities tend to quote the
two interchangeably.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

ACTIVE_THRESHOLD = 10  # strictly more than this many messages


@dataclass(frozen=True)
class EngagementMetrics:
    total_messages: int
    total_votes: int
    total_interactions: int
    speakers: int
    active_members: int
    active_ratio: float
    avg_votes_per_day: float
    channel_share: float | None

    def to_dict(self) -> dict:
        return {
            "total_messages": self.total_messages,
            "total_votes": self.total_votes,
            "total_interactions": self.total_interactions,
            "speakers": self.speakers,
            "active_members": self.active_members,
            "active_ratio": self.active_ratio,
            "avg_votes_per_day": self.avg_votes_per_day,
            "channel_share": self.channel_share,
        }


def compute_metrics(records: Iterable[Mapping], *,
                    community_total_messages: int | None = None,
                    active_threshold: int = ACTIVE_THRESHOLD) -> EngagementMetrics:
    """Fold a log (header already stripped) into an EngagementMetrics.

    ``community_total_messages`` is the whole community's message count for
    the same period, supplied by the operator; without it channel_share is
    left unset. Results do not depend on record order.
    """
    messages_by_user: Counter[str] = Counter()
    total_messages = 0
    total_votes = 0
    voters_by_day: dict[int, set[str]] = {}
    decision_days: set[int] = set()
    saw_release_days = False

    for rec in records:
        kind = rec.get("kind")
        if kind == "chat":
            total_messages += 1
            user = rec.get("user_id")
            if user is not None:
                messages_by_user[user] += 1
        elif kind == "vote":
            total_votes += 1
            day = rec.get("day_index")
            user = rec.get("user_id")
            if day is not None and user is not None:
                voters_by_day.setdefault(int(day), set()).add(user)
        elif kind == "story_release":
            if rec.get("had_choices") and rec.get("closed_day") is not None:
                decision_days.add(int(rec["closed_day"]))
                saw_release_days = True

    if not saw_release_days:
        decision_days = set(voters_by_day)

    speakers = len(messages_by_user)
    active_members = sum(1 for n in messages_by_user.values() if n > active_threshold)
    active_ratio = active_members / speakers if speakers else 0.0

    if decision_days:
        per_day = [len(voters_by_day.get(day, set())) for day in decision_days]
        avg_votes_per_day = sum(per_day) / len(per_day)
    else:
        avg_votes_per_day = 0.0

    channel_share: float | None = None
    if community_total_messages is not None:
        if community_total_messages <= 0:
            raise ValueError("community total must be positive")
        channel_share = total_messages / community_total_messages

    return EngagementMetrics(
        total_messages=total_messages,
        total_votes=total_votes,
        total_interactions=total_messages + total_votes,
        speakers=speakers,
        active_members=active_members,
        active_ratio=active_ratio,
        avg_votes_per_day=avg_votes_per_day,
        channel_share=channel_share,
    )


def render_table(metrics: EngagementMetrics) -> str:
    rows = [
        ("total messages", str(metrics.total_messages)),
        ("total votes", str(metrics.total_votes)),
        ("total interactions", str(metrics.total_interactions)),
        ("speakers", str(metrics.speakers)),
        ("active members", str(metrics.active_members)),
        ("active ratio", f"{metrics.active_ratio:.2%}"),
        ("avg votes per day", f"{metrics.avg_votes_per_day:g}"),
    ]
    if metrics.channel_share is not None:
        rows.append(("channel share", f"{metrics.channel_share:.2%}"))
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label.ljust(width)}  {value}" for label, value in rows)
