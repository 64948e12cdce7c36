"""Rebuild engine state from an event log.

Replay walks the inbound half of the log — chats, votes, admin commands and
the engine_start marker — and feeds them to a freshly built engine whose
virtual clock is advanced to each record's timestamp. Outbound records are
skipped; the engine regenerates them. With a scripted provider the rebuilt
snapshot is byte-identical to the original run's (a remote LLM backend makes
no such promise and is the operator's problem).

The factory must hand over an unstarted engine with no log attached and a
virtual clock, typically the same construction path the simulator uses.
"""
from __future__ import annotations

from pathlib import Path

from .clock import VirtualClock
from .engine import LiveEngine
from .errors import IncompatibleLog
from .events import OUTBOUND_KINDS, read_log

from typing import Callable


def replay(log_path: str | Path, engine_factory: Callable[[], LiveEngine]) -> LiveEngine:
    records = read_log(log_path)
    engine = engine_factory()
    if engine.started:
        raise ValueError("engine factory must return an unstarted engine")
    if engine.log is not None:
        raise ValueError("replay engine must not write a log of its own")
    clock = engine.clock
    if not isinstance(clock, VirtualClock):
        raise ValueError("replay requires a virtual clock")

    for rec in records:
        kind = rec.get("kind")
        if kind in OUTBOUND_KINDS:
            continue
        ts = rec["ts"]
        clock.set(ts)
        if kind == "engine_start":
            engine.start()
        elif kind == "chat":
            engine.handle_chat(rec["channel"], rec["user_id"], rec["text"])
        elif kind == "vote":
            engine.cast_vote(rec["user_id"], rec["choice_index"])
        elif kind == "admin":
            _apply_admin(engine, rec)
        else:
            raise IncompatibleLog(f"unknown record kind {kind!r}")
    return engine


def _apply_admin(engine: LiveEngine, rec: dict) -> None:
    command = rec.get("command")
    args = rec.get("args", {})
    if command == "close-day":
        if args.get("reason") == "forced":
            engine.force_close()
        else:
            # Deadline closes re-fire from the clock; if an earlier clock
            # jump already cascaded this closure, tick is a no-op.
            engine.tick()
    elif command == "clock":
        engine.set_clock(args["virtual_now"])
    elif command == "canonize":
        engine.canonize(args["fact"])
    else:
        raise IncompatibleLog(f"unknown admin command {command!r}")
