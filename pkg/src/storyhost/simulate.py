"""Scripted multi-day runs under a compressed virtual clock.

A simulation script stands in for the community: a roster of agents, each
with timed vote and chat actions, plus the scripted provider rules and the
day compression factor. Everything an agent does is addressed in story time
— action time is ``(day + offset) * day_seconds`` from engine start — so the
same script runs identically at 2 seconds per day or 24 hours per day.

Runs are deterministic: actions fire in (time, user, script-order) order and
the only randomness (an agent voting ``"random"``) draws from a seeded RNG.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .clock import VirtualClock
from .clues import DEFAULT_THRESHOLD
from .config import EngineConfig, build_corpus, build_filters
from .dialogue import DEFAULT_HISTORY_ROUNDS
from .engine import LiveEngine
from .errors import EngineError, SimulationError
from .events import EventLog, read_log
from .filters import FilterList
from .metrics import EngagementMetrics, compute_metrics
from .narrative import StoryPackage
from .providers import DEFAULT_REPLY, ScriptedProvider, ScriptedRule

SCRIPT_SCHEMA_VERSION = 1
DEFAULT_SIM_DAY_SECONDS = 2.0


@dataclass(frozen=True)
class AgentAction:
    day: int
    offset: float  # fraction of the day, in [0, 1)
    type: str      # "vote" | "chat"
    choice: int | str | None = None  # index, or "random"
    text: str | None = None
    channel: str = "main"


@dataclass(frozen=True)
class AgentScript:
    user_id: str
    actions: tuple[AgentAction, ...]


@dataclass(frozen=True)
class SimulationScript:
    agents: tuple[AgentScript, ...]
    day_seconds: float = DEFAULT_SIM_DAY_SECONDS
    provider_rules: tuple[ScriptedRule, ...] = ()
    provider_default: str = DEFAULT_REPLY
    filter_keywords: tuple[str, ...] = ()
    clue_corpus: str | None = None
    clue_threshold: float = DEFAULT_THRESHOLD
    history_rounds: int = DEFAULT_HISTORY_ROUNDS
    base_dir: Path = field(default=Path("."), compare=False)


def parse_script(raw: dict, base_dir: Path = Path(".")) -> SimulationScript:
    if raw.get("schema_version") != SCRIPT_SCHEMA_VERSION:
        raise SimulationError(
            f"script schema_version {raw.get('schema_version')!r} is not "
            f"{SCRIPT_SCHEMA_VERSION}")
    provider = raw.get("provider", {})
    agents = []
    for a in raw.get("agents", ()):
        actions = []
        for act in a.get("actions", ()):
            day, offset = int(act["day"]), float(act.get("offset", 0.5))
            if day < 0 or not 0 <= offset < 1:
                raise SimulationError(
                    f"agent {a.get('user_id')}: action at day {day} offset "
                    f"{offset} is outside the simulated horizon")
            kind = act["type"]
            if kind == "vote":
                choice = act["choice"]
                if not (choice == "random" or isinstance(choice, int)):
                    raise SimulationError(f"bad vote choice {choice!r}")
            elif kind == "chat":
                if not act.get("text"):
                    raise SimulationError("chat action without text")
                choice = None
            else:
                raise SimulationError(f"unknown action type {kind!r}")
            actions.append(AgentAction(
                day=day, offset=offset, type=kind, choice=choice,
                text=act.get("text"), channel=act.get("channel", "main")))
        agents.append(AgentScript(user_id=a["user_id"], actions=tuple(actions)))
    return SimulationScript(
        agents=tuple(agents),
        day_seconds=float(raw.get("day_seconds", DEFAULT_SIM_DAY_SECONDS)),
        provider_rules=tuple(ScriptedRule(r["pattern"], r["reply"])
                             for r in provider.get("rules", ())),
        provider_default=provider.get("default_reply", DEFAULT_REPLY),
        filter_keywords=tuple(raw.get("filter_keywords", ())),
        clue_corpus=raw.get("clue_corpus"),
        clue_threshold=float(raw.get("clue_threshold", DEFAULT_THRESHOLD)),
        history_rounds=int(raw.get("history_rounds", DEFAULT_HISTORY_ROUNDS)),
        base_dir=base_dir,
    )


def load_script(path: str | Path) -> SimulationScript:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_script(json.load(fh), base_dir=path.parent)


def engine_factory(package: StoryPackage, script: SimulationScript,
                   log: EventLog | None = None) -> Callable[[], LiveEngine]:
    """Build-engine closure shared by live simulation and replay, so both
    sides construct byte-identical state."""
    cfg = EngineConfig(
        filter_keywords=script.filter_keywords,
        clue_corpus=script.clue_corpus,
        clue_threshold=script.clue_threshold,
        base_dir=script.base_dir,
    )
    filters = build_filters(cfg) if script.filter_keywords else FilterList.from_words(())
    corpus = build_corpus(cfg)

    def factory() -> LiveEngine:
        return LiveEngine(
            package,
            provider=ScriptedProvider(script.provider_rules, script.provider_default),
            filters=filters,
            clock=VirtualClock(),
            corpus=corpus,
            log=log,
            day_seconds=script.day_seconds,
            clue_threshold=script.clue_threshold,
            history_rounds=script.history_rounds,
        )
    return factory


def run_simulation(package: StoryPackage, script: SimulationScript,
                   out_log: str | Path, *, seed: int = 0,
                   on_step: Callable[[LiveEngine], None] | None = None,
                   ) -> tuple[LiveEngine, EngagementMetrics]:
    """Run the whole event start to finish and leave an event log behind.

    ``on_step`` fires after engine start and after every applied action —
    the hook the prefix-replay checks use to pair log positions with live
    snapshots.
    """
    rng = random.Random(seed)
    timeline = sorted(
        ((script.day_seconds * (action.day + action.offset), agent.user_id, n, action)
         for agent in script.agents
         for n, action in enumerate(agent.actions)),
        key=lambda item: item[:3],
    )
    with EventLog(out_log, header_extra={"seed": seed,
                                         "day_seconds": script.day_seconds}) as log:
        engine = engine_factory(package, script, log)()
        engine.start()
        if on_step is not None:
            on_step(engine)
        for t, user_id, _, action in timeline:
            clock = engine.clock
            assert isinstance(clock, VirtualClock)
            clock.set(t)
            engine.tick()
            try:
                if action.type == "vote":
                    choice = action.choice
                    if choice == "random":
                        day = engine.day
                        if day is None or not day.choice_indices:
                            raise SimulationError(
                                f"{user_id}: random vote on day {action.day} "
                                "but no choices are open")
                        choice = rng.choice(day.choice_indices)
                    engine.cast_vote(user_id, int(choice))
                else:
                    engine.handle_chat(action.channel, user_id, action.text or "")
            except SimulationError:
                raise
            except EngineError as exc:
                raise SimulationError(
                    f"{user_id}: {action.type} at day {action.day} offset "
                    f"{action.offset} rejected: {exc}") from exc
            if on_step is not None:
                on_step(engine)
        # Drain the remaining days so the story reaches an ending.
        while not engine.finished and engine.day is not None:
            clock = engine.clock
            assert isinstance(clock, VirtualClock)
            clock.set(engine.day.closes_at)
            engine.tick()
            if on_step is not None:
                on_step(engine)
    metrics = compute_metrics(read_log(out_log))
    return engine, metrics
