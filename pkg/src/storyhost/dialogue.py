"""The character's conversation pipeline.

Every inbound community message runs the same gauntlet, in order:

    inbound keyword filter -> clue lookup -> language model -> outbound filter

A blocked inbound message gets a fixed refusal and never touches history. A
clue hit answers from the static corpus without calling the provider. A
provider reply that trips the outbound filter is replaced by a fixed apology
so the character never goes silent mid-scene. Each message produces a
PipelineTrace recording which stage answered.

Prompts are assembled from three parts — the character's base prompt, the
live story so far, and a rolling window of the most recent conversation
rounds — followed by the new message and the character-name cue.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .clues import ClueCorpus, DEFAULT_THRESHOLD
from .errors import ProviderUnavailable
from .events import OutboundPost
from .filters import FilterList, FilterResult, filter_text
from .narrative import Character, StoryState
from .providers import ChatProvider

USER = "user"
CHARACTER = "character"

DEFAULT_HISTORY_ROUNDS = 5
DEFAULT_REFUSAL = "Let's keep things civil here. I won't respond to that."
DEFAULT_APOLOGY = "I'd rather not say what first came to mind. Ask me something else."


@dataclass(frozen=True)
class DialogueTurn:
    author: str
    text: str
    user_id: str | None = None
    timestamp: float = 0.0


def window_history(turns: Sequence[DialogueTurn], k: int = DEFAULT_HISTORY_ROUNDS,
                   ) -> list[DialogueTurn]:
    """Suffix of ``turns`` holding at most the ``k`` most recent rounds.

    A round starts at a user turn and carries the character reply that
    follows it; order is preserved.
    """
    if k <= 0:
        return []
    rounds = 0
    for i in range(len(turns) - 1, -1, -1):
        if turns[i].author == USER:
            rounds += 1
            if rounds == k:
                return list(turns[i:])
    return list(turns)


def render_prompt(character_prompt: str, live_story_prompt: str,
                  history: Sequence[DialogueTurn], new_message: str,
                  character_name: str) -> str:
    sections = [character_prompt]
    if live_story_prompt:
        sections.append("The story so far:\n" + live_story_prompt)
    if history:
        lines = [
            (f"User: {t.text}" if t.author == USER else f"{character_name}: {t.text}")
            for t in history
        ]
        sections.append("Recent conversation:\n" + "\n".join(lines))
    sections.append(f"User: {new_message}")
    sections.append(f"{character_name}:")
    return "\n\n".join(sections)


@dataclass(frozen=True)
class PromptBundle:
    character_prompt: str
    live_story_prompt: str
    history: tuple[DialogueTurn, ...]
    new_message: str
    character_name: str
    rendered: str


def assemble_prompt(character: Character, state: StoryState,
                    turns: Sequence[DialogueTurn], new_message: str,
                    k: int = DEFAULT_HISTORY_ROUNDS) -> PromptBundle:
    history = tuple(window_history(turns, k))
    return PromptBundle(
        character_prompt=character.base_prompt,
        live_story_prompt=state.live_story_prompt,
        history=history,
        new_message=new_message,
        character_name=character.name,
        rendered=render_prompt(character.base_prompt, state.live_story_prompt,
                               history, new_message, character.name),
    )


@dataclass
class PipelineTrace:
    """Per-message record of which stage produced the reply; surfaced to
    moderators via the gateway."""
    trace_id: str
    channel: str
    user_id: str | None
    message: str
    inbound_filter: str = "pass"
    inbound_keyword: str | None = None
    clue_id: str | None = None
    provider_called: bool = False
    outbound_filter: str | None = None
    outbound_keyword: str | None = None
    final_reply: str = ""
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "channel": self.channel,
            "user_id": self.user_id,
            "message": self.message,
            "inbound_filter": self.inbound_filter,
            "inbound_keyword": self.inbound_keyword,
            "clue_id": self.clue_id,
            "provider_called": self.provider_called,
            "outbound_filter": self.outbound_filter,
            "outbound_keyword": self.outbound_keyword,
            "final_reply": self.final_reply,
            "timestamp": self.timestamp,
        }


class DialogueSession:
    """One shared conversation per channel.

    The session is bound to a character, a story state, a clue corpus, a
    filter list, and a provider. The engine updates ``character`` and
    ``story_state`` as the live story advances; history belongs to the
    session and grows one round per answered message.
    """

    def __init__(self, channel: str, character: Character, story_state: StoryState,
                 filters: FilterList, provider: ChatProvider,
                 corpus: ClueCorpus | None = None, *,
                 clue_threshold: float = DEFAULT_THRESHOLD,
                 history_rounds: int = DEFAULT_HISTORY_ROUNDS,
                 refusal_template: str = DEFAULT_REFUSAL,
                 apology_template: str = DEFAULT_APOLOGY,
                 trace_ids: Iterator[str] | None = None):
        self.channel = channel
        self.character = character
        self.story_state = story_state
        self.filters = filters
        self.provider = provider
        self.corpus = corpus
        self.clue_threshold = clue_threshold
        self.history_rounds = history_rounds
        self.refusal_template = refusal_template
        self.apology_template = apology_template
        self.history: list[DialogueTurn] = []
        self._trace_ids = trace_ids if trace_ids is not None else _counter_ids()

    def handle_message(self, inbound: DialogueTurn) -> tuple[OutboundPost, PipelineTrace]:
        if not inbound.text:
            raise ValueError("inbound turn must carry text")
        trace = PipelineTrace(
            trace_id=next(self._trace_ids),
            channel=self.channel,
            user_id=inbound.user_id,
            message=inbound.text,
            timestamp=inbound.timestamp,
        )

        inbound_result = filter_text(inbound.text, self.filters)
        if inbound_result.blocked:
            trace.inbound_filter = "blocked"
            trace.inbound_keyword = inbound_result.keyword
            trace.final_reply = self.refusal_template
            return self._post(self.refusal_template, inbound, trace), trace

        if self.corpus is not None:
            match = self.corpus.find(inbound.text, self.clue_threshold)
            if match is not None:
                trace.clue_id = match.entry.id
                reply, image = match.entry.reply_text, match.entry.image_url
                final = self._outbound(reply, trace)
                self._append_round(inbound, final)
                trace.final_reply = final
                illustrations = (image,) if image and final is reply else ()
                return self._post(final, inbound, trace, illustrations=illustrations), trace

        bundle = assemble_prompt(self.character, self.story_state, self.history,
                                 inbound.text, self.history_rounds)
        trace.provider_called = True
        raw = self.provider.complete(bundle.rendered)
        final = self._outbound(raw, trace)
        self._append_round(inbound, final)
        trace.final_reply = final
        return self._post(final, inbound, trace), trace

    def _outbound(self, reply: str, trace: PipelineTrace) -> str:
        result = filter_text(reply, self.filters)
        if result.blocked:
            trace.outbound_filter = "blocked"
            trace.outbound_keyword = result.keyword
            return self.apology_template
        trace.outbound_filter = "pass"
        return reply

    def _append_round(self, inbound: DialogueTurn, reply: str) -> None:
        self.history.append(inbound)
        self.history.append(DialogueTurn(author=CHARACTER, text=reply,
                                         timestamp=inbound.timestamp))

    def _post(self, text: str, inbound: DialogueTurn, trace: PipelineTrace,
              illustrations: tuple[str, ...] = ()) -> OutboundPost:
        return OutboundPost(
            kind="chat_reply",
            channel=self.channel,
            text=text,
            illustrations=illustrations,
            reply_to=inbound.user_id,
            trace_id=trace.trace_id,
        )


def _counter_ids() -> Iterator[str]:
    n = 0
    while True:
        n += 1
        yield f"trace-{n}"
