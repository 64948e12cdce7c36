"""storyhost: run a character's branching story as a live community event.

The package splits along the day cycle: `narrative` holds the immutable
story graph, `votes` the daily decision window, `dialogue` the filtered
clue-aware chat pipeline, `engine` the running event that ties them
together, `events`/`replay`/`metrics` the append-only log and what can be
rebuilt from it, and `gateway` the HTTP surface clients talk to.
"""
from __future__ import annotations

from .clock import VirtualClock, WallClock
from .clues import (ClueCorpus, ClueEntry, ClueMatch, TrigramHashEmbedder,
                    cosine_similarity, find_clue, load_corpus)
from .dialogue import (DialogueSession, DialogueTurn, PipelineTrace,
                       PromptBundle, assemble_prompt, window_history)
from .engine import LiveEngine
from .errors import (EngineError, EmptyFact, IncompatibleLog, InvalidChoice,
                     InvalidVector, NonMonotonicEvent, PackageFormatError,
                     ProviderUnavailable, SimulationError, StoryFinished,
                     VotingClosed)
from .events import EventLog, OutboundPost, read_header, read_log
from .filters import FilterList, filter_text
from .gateway import create_gateway_app
from .metrics import EngagementMetrics, compute_metrics, render_table
from .narrative import (Character, Choice, StoryNode, StoryPackage, StoryState,
                        advance_story, canonize_fact, load_package,
                        parse_package, resolve_branch, validate_package)
from .providers import HTTPChatProvider, ScriptedProvider, ScriptedRule
from .replay import replay
from .simulate import SimulationScript, load_script, run_simulation
from .votes import DayState, Tally, cast_vote, tally_votes

__version__ = "0.1.0"

__all__ = [
    "Character", "Choice", "ClueCorpus", "ClueEntry", "ClueMatch", "DayState",
    "DialogueSession", "DialogueTurn", "EngagementMetrics", "EngineError",
    "EmptyFact", "EventLog", "FilterList", "HTTPChatProvider",
    "IncompatibleLog", "InvalidChoice", "InvalidVector", "LiveEngine",
    "NonMonotonicEvent", "OutboundPost", "PackageFormatError", "PipelineTrace",
    "PromptBundle", "ProviderUnavailable", "ScriptedProvider", "ScriptedRule",
    "SimulationError", "SimulationScript", "StoryFinished", "StoryNode",
    "StoryPackage", "StoryState", "Tally", "TrigramHashEmbedder",
    "VirtualClock", "VotingClosed", "WallClock", "advance_story",
    "assemble_prompt", "canonize_fact", "cast_vote", "compute_metrics",
    "cosine_similarity", "create_gateway_app", "filter_text", "find_clue",
    "load_corpus", "load_package", "load_script", "parse_package",
    "read_header", "read_log", "render_table", "replay", "resolve_branch",
    "run_simulation", "tally_votes", "validate_package", "window_history",
]
