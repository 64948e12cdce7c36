"""Wire types and the append-only event log.

Log files are newline-delimited JSON: one header line carrying the schema
version, then one record per event with a non-decreasing ``ts``. Appends are
flushed and fsynced before the call returns, so an acknowledged record
survives a crash.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .errors import IncompatibleLog, NonMonotonicEvent

LOG_SCHEMA_VERSION = 1

INBOUND_KINDS = ("chat", "vote", "admin")
OUTBOUND_KINDS = ("story_release", "chat_reply", "tally_update", "system")


@dataclass(frozen=True)
class OutboundPost:
    """Anything the engine publishes: story releases, chat replies, live
    tallies, and system notices. Fields not meaningful for a kind stay at
    their defaults (choices only on decision-node releases, tally only on
    tally updates)."""
    kind: str
    channel: str
    text: str = ""
    illustrations: tuple[str, ...] = ()
    choices: tuple[dict, ...] | None = None
    tally: dict[int, int] | None = None
    node_id: str | None = None
    day_index: int | None = None
    reply_to: str | None = None
    trace_id: str | None = None

    def to_record(self, ts: float, **extra) -> dict:
        record = {"ts": ts, "kind": self.kind, "channel": self.channel, "text": self.text}
        if self.illustrations:
            record["illustrations"] = list(self.illustrations)
        if self.choices is not None:
            record["choices"] = [dict(c) for c in self.choices]
        if self.tally is not None:
            record["tally"] = {str(k): v for k, v in self.tally.items()}
        if self.node_id is not None:
            record["node_id"] = self.node_id
        if self.day_index is not None:
            record["day_index"] = self.day_index
        if self.reply_to is not None:
            record["reply_to"] = self.reply_to
        if self.trace_id is not None:
            record["trace_id"] = self.trace_id
        record.update(extra)
        return record


def chat_record(ts: float, channel: str, user_id: str, text: str) -> dict:
    return {"ts": ts, "kind": "chat", "channel": channel, "user_id": user_id, "text": text}


def vote_record(ts: float, channel: str, user_id: str, choice_index: int,
                day_index: int) -> dict:
    return {"ts": ts, "kind": "vote", "channel": channel, "user_id": user_id,
            "choice_index": choice_index, "day_index": day_index}


def admin_record(ts: float, command: str, **args) -> dict:
    record = {"ts": ts, "kind": "admin", "command": command}
    if args:
        record["args"] = args
    return record


def engine_start_record(ts: float, package_start: str) -> dict:
    return {"ts": ts, "kind": "engine_start", "package_start": package_start}


def encode_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


class EventLog:
    """Append-only NDJSON log. A fresh file gets a header line; reopening an
    existing file resumes after its last record."""

    def __init__(self, path: str | Path, *, header_extra: dict | None = None):
        self.path = Path(path)
        self.last_ts = float("-inf")
        self.records_written = 0
        existing = self.path.exists() and self.path.stat().st_size > 0
        self._fh: IO[str] = open(self.path, "a", encoding="utf-8")
        if existing:
            for record in read_log(self.path):
                self.last_ts = max(self.last_ts, record["ts"])
                self.records_written += 1
        else:
            header = {"kind": "header", "schema_version": LOG_SCHEMA_VERSION}
            if header_extra:
                header.update(header_extra)
            self._fh.write(encode_record(header) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def append(self, record: dict) -> None:
        ts = record["ts"]
        if ts < self.last_ts:
            raise NonMonotonicEvent(
                f"record ts {ts} precedes last appended ts {self.last_ts}")
        self._fh.write(encode_record(record) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.last_ts = ts
        self.records_written += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: str | Path) -> list[dict]:
    """Load all records from a log file, validating the header. Raises
    IncompatibleLog for a missing header or a schema version mismatch."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise IncompatibleLog(f"{path} has no header line")
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise IncompatibleLog(f"{path} does not start with a header record")
    if header.get("schema_version") != LOG_SCHEMA_VERSION:
        raise IncompatibleLog(
            f"log schema_version {header.get('schema_version')!r} is not "
            f"{LOG_SCHEMA_VERSION}")
    return [json.loads(line) for line in lines[1:] if line.strip()]


def read_header(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        raise IncompatibleLog(f"{path} has no header line")
    header = json.loads(first)
    if header.get("kind") != "header":
        raise IncompatibleLog(f"{path} does not start with a header record")
    if header.get("schema_version") != LOG_SCHEMA_VERSION:
        raise IncompatibleLog(
            f"log schema_version {header.get('schema_version')!r} is not "
            f"{LOG_SCHEMA_VERSION}")
    return header
