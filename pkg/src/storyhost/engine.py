"""The live engine: one running story event.

Owns all mutable state — the released story, the open voting day, the
per-channel conversations — and is the only writer of the event log. Every
mutating entry point takes one internal lock, so the engine behaves as a
single-writer state machine no matter how many gateway connections feed it.

Day cycle: the start node is on display when the engine starts; a voting
window opens immediately. ``tick`` closes the window once the deadline
passes, the winning branch (or the warm-up successor) is released as the
next node, and a new window opens — until a terminal node is released and
the engine finishes.

Everything that mutates state is also appended to the log as an inbound
record (chat, vote, admin close-day/clock/canonize, plus one engine_start
marker), which is what makes byte-exact replay possible.
"""
from __future__ import annotations

import threading
from typing import Callable, Iterator

from .clock import Clock, VirtualClock
from .clues import ClueCorpus, DEFAULT_THRESHOLD
from .dialogue import (DEFAULT_APOLOGY, DEFAULT_HISTORY_ROUNDS, DEFAULT_REFUSAL,
                       DialogueSession, DialogueTurn, PipelineTrace)
from .errors import InvalidChoice, StoryFinished
from .events import (EventLog, OutboundPost, admin_record, chat_record,
                     engine_start_record, vote_record)
from .filters import FilterList
from .narrative import (StoryNode, StoryPackage, StoryState, advance_story,
                        canonize_fact, resolve_branch)
from .providers import ChatProvider
from .votes import DayState, Tally, cast_vote, tally_votes

DEFAULT_DAY_SECONDS = 86400.0
STORY_CHANNEL = "story"

Subscriber = Callable[[dict], None]


def _choice_payload(node: StoryNode) -> tuple[dict, ...] | None:
    if not node.choices:
        return None
    return tuple({"index": c.index, "emoji": c.emoji, "caption": c.caption}
                 for c in node.choices)


class LiveEngine:
    def __init__(self, package: StoryPackage, *, provider: ChatProvider,
                 filters: FilterList, clock: Clock,
                 corpus: ClueCorpus | None = None,
                 log: EventLog | None = None,
                 day_seconds: float = DEFAULT_DAY_SECONDS,
                 clue_threshold: float = DEFAULT_THRESHOLD,
                 history_rounds: int = DEFAULT_HISTORY_ROUNDS,
                 refusal_template: str = DEFAULT_REFUSAL,
                 apology_template: str = DEFAULT_APOLOGY):
        self.package = package
        self.provider = provider
        self.filters = filters
        self.clock = clock
        self.corpus = corpus
        self.log = log
        self.day_seconds = day_seconds
        self.clue_threshold = clue_threshold
        self.history_rounds = history_rounds
        self.refusal_template = refusal_template
        self.apology_template = apology_template

        self.character = package.character
        self.story_state: StoryState | None = None
        self.day: DayState | None = None
        self.finished = False
        self.started = False
        self.traces: dict[str, PipelineTrace] = {}
        self._sessions: dict[str, DialogueSession] = {}
        self._trace_seq = 0
        self._subscribers: list[Subscriber] = []
        self._last_ts = float("-inf")
        self._lock = threading.RLock()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        with self._lock:
            if self.started:
                raise RuntimeError("engine already started")
            self.started = True
            start_node = self.package.nodes[self.package.start]
            now = self._stamp()
            self._log(engine_start_record(now, self.package.start))
            self.story_state = StoryState.initial(self.package)
            self.day = DayState.open(start_node, now, self.day_seconds)

    @property
    def current_node(self) -> StoryNode | None:
        state = self.story_state
        return self.package.nodes[state.current] if state else None

    # -- votes -------------------------------------------------------------

    def cast_vote(self, user_id: str, choice_index: int) -> Tally:
        with self._lock:
            day = self._require_day()
            if not day.has_choices:
                raise InvalidChoice(
                    f"day {day.day_index} is a warm-up day with no choices")
            now = self._stamp()
            self.day = cast_vote(day, user_id, choice_index, now)
            self._log(vote_record(now, STORY_CHANNEL, user_id, choice_index,
                                  self.day.day_index))
            tally = tally_votes(self.day)
            self._emit(OutboundPost(
                kind="tally_update", channel=STORY_CHANNEL,
                tally=dict(tally.counts), node_id=self.day.node_id,
                day_index=self.day.day_index,
            ), now, voters=tally.voters)
            return tally

    def current_tally(self) -> Tally | None:
        with self._lock:
            return tally_votes(self.day) if self.day else None

    # -- chat ----------------------------------------------------------------

    def handle_chat(self, channel: str, user_id: str, text: str,
                    ) -> tuple[OutboundPost, PipelineTrace]:
        with self._lock:
            if not self.started:
                raise RuntimeError("engine not started")
            if not text:
                raise ValueError("chat message must carry text")
            now = self._stamp()
            self._log(chat_record(now, channel, user_id, text))
            session = self._session(channel)
            inbound = DialogueTurn(author="user", text=text, user_id=user_id,
                                   timestamp=now)
            post, trace = session.handle_message(inbound)
            self.traces[trace.trace_id] = trace
            self._emit(post, now)
            return post, trace

    # -- clock / day cycle ---------------------------------------------------

    def tick(self) -> list[OutboundPost]:
        """Close every deadline the clock has passed; safe to call repeatedly."""
        with self._lock:
            releases: list[OutboundPost] = []
            while (self.day is not None and not self.finished
                   and self.clock.now() >= self.day.closes_at):
                at = max(self.day.closes_at, self._last_ts)
                self._log(admin_record(at, "close-day", reason="deadline",
                                       day_index=self.day.day_index))
                releases.append(self._close_day(at))
            return releases

    def force_close(self) -> OutboundPost:
        """Moderator override: close the open day right now."""
        with self._lock:
            self._require_day()
            now = self._stamp()
            self._log(admin_record(now, "close-day", reason="forced",
                                   day_index=self.day.day_index))
            return self._close_day(now)

    def set_clock(self, virtual_now: float) -> float:
        with self._lock:
            if not isinstance(self.clock, VirtualClock):
                raise RuntimeError("clock is not adjustable in service mode")
            now = self._stamp()
            self._log(admin_record(now, "clock", virtual_now=virtual_now))
            self.clock.set(virtual_now)
            return self.clock.now()

    def canonize(self, fact: str) -> None:
        with self._lock:
            updated = canonize_fact(self.character, fact)  # validates first
            now = self._stamp()
            self._log(admin_record(now, "canonize", fact=fact))
            self.character = updated
            for session in self._sessions.values():
                session.character = self.character
            self._emit(OutboundPost(
                kind="system", channel=STORY_CHANNEL,
                text=f"Canon update: {fact}",
            ), now)

    def _close_day(self, at: float) -> OutboundPost:
        day = self._require_day()
        self._last_ts = max(self._last_ts, at)
        node = self.package.nodes[day.node_id]
        tally = tally_votes(day)
        if day.has_choices:
            self._emit(OutboundPost(
                kind="tally_update", channel=STORY_CHANNEL,
                tally=dict(tally.counts), node_id=day.node_id,
                day_index=day.day_index,
            ), at, voters=tally.voters, final=True)
        next_node = self.package.nodes[resolve_branch(node, tally.counts)]
        assert self.story_state is not None
        self.story_state = advance_story(self.story_state, next_node)
        for session in self._sessions.values():
            session.story_state = self.story_state
        release = OutboundPost(
            kind="story_release", channel=STORY_CHANNEL,
            text=next_node.body, illustrations=next_node.illustrations,
            choices=_choice_payload(next_node),
            node_id=next_node.id, day_index=next_node.day_index,
        )
        self._emit(release, at, closed_day=day.day_index,
                   closed_node=day.node_id, had_choices=day.has_choices)
        if next_node.terminal:
            self.finished = True
            self.day = None
        else:
            self.day = DayState.open(next_node, at, self.day_seconds)
        return release

    def _require_day(self) -> DayState:
        if not self.started:
            raise RuntimeError("engine not started")
        if self.finished:
            raise StoryFinished("the story has ended")
        if self.day is None:
            raise RuntimeError("no day is open")
        return self.day

    # -- plumbing ------------------------------------------------------------

    def subscribe(self, fn: Subscriber) -> Callable[[], None]:
        with self._lock:
            self._subscribers.append(fn)

        def unsubscribe() -> None:
            with self._lock:
                if fn in self._subscribers:
                    self._subscribers.remove(fn)
        return unsubscribe

    def _session(self, channel: str) -> DialogueSession:
        session = self._sessions.get(channel)
        if session is None:
            assert self.story_state is not None
            session = DialogueSession(
                channel, self.character, self.story_state, self.filters,
                self.provider, self.corpus,
                clue_threshold=self.clue_threshold,
                history_rounds=self.history_rounds,
                refusal_template=self.refusal_template,
                apology_template=self.apology_template,
                trace_ids=self._shared_trace_ids(),
            )
            self._sessions[channel] = session
        return session

    def _shared_trace_ids(self) -> Iterator[str]:
        while True:
            self._trace_seq += 1
            yield f"trace-{self._trace_seq}"

    def _stamp(self) -> float:
        # Log timestamps must never regress, even if the wall clock does.
        ts = max(self.clock.now(), self._last_ts)
        self._last_ts = ts
        return ts

    def _log(self, record: dict) -> None:
        if self.log is not None:
            self.log.append(record)

    def _emit(self, post: OutboundPost, ts: float, **extra) -> None:
        record = post.to_record(ts, **extra)
        self._log(record)
        for fn in list(self._subscribers):
            fn(record)

    # -- state snapshot --------------------------------------------------------

    def snapshot(self) -> dict:
        """Full observable state, replay-comparable field by field."""
        with self._lock:
            day = None
            if self.day is not None:
                day = {
                    "day_index": self.day.day_index,
                    "node_id": self.day.node_id,
                    "opened_at": self.day.opened_at,
                    "closes_at": self.day.closes_at,
                    "votes": dict(sorted(self.day.votes.items())),
                }
            story = None
            if self.story_state is not None:
                story = {
                    "released": list(self.story_state.released),
                    "live_story_prompt": self.story_state.live_story_prompt,
                }
            return {
                "schema_version": 1,
                "started": self.started,
                "finished": self.finished,
                "character": {
                    "name": self.character.name,
                    "canon_facts": list(self.character.canon_facts),
                },
                "story": story,
                "day": day,
                "histories": {
                    channel: [[t.author, t.text] for t in session.history]
                    for channel, session in sorted(self._sessions.items())
                },
                "traces_issued": self._trace_seq,
            }

    def snapshot_bytes(self) -> bytes:
        import json
        return json.dumps(self.snapshot(), sort_keys=True,
                          ensure_ascii=False).encode("utf-8")
