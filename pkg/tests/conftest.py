from __future__ import annotations

import threading
import time
from pathlib import Path

import pytest

from storyhost.clock import VirtualClock
from storyhost.engine import LiveEngine
from storyhost.filters import FilterList
from storyhost.narrative import (Character, Choice, StoryNode, StoryPackage,
                                 load_package)
from storyhost.providers import ScriptedProvider, ScriptedRule

REPO_ROOT = Path(__file__).resolve().parent.parent
STORIES = REPO_ROOT / "stories"


@pytest.fixture(scope="session")
def stories_dir() -> Path:
    return STORIES


@pytest.fixture(scope="session")
def catherine_package():
    return load_package(STORIES / "catherine.story.json")


@pytest.fixture(scope="session")
def david_package():
    return load_package(STORIES / "david.story.json")


def make_character(name: str = "Vala") -> Character:
    return Character.create(
        name,
        "A wry courier who answers plainly.",
        "A rain-soaked port town of canals and cranes.",
    )


def make_package(warmup_days: int = 1) -> StoryPackage:
    """Small well-formed graph: one warm-up day, one decision day, two endings."""
    nodes = {
        "n0": StoryNode(id="n0", day_index=0, body="Day zero. The job arrives.",
                        summary="The courier took a mysterious job.",
                        successor="n1"),
        "n1": StoryNode(id="n1", day_index=1, body="A fork in the canal.",
                        summary="The courier reached a fork.",
                        choices=(
                            Choice(0, "⬅️", "Take the west canal", "end-west"),
                            Choice(1, "➡️", "Take the east canal", "end-east"),
                        )),
        "end-west": StoryNode(id="end-west", day_index=2, body="West: the quiet delivery.",
                              summary="Delivered quietly in the west.", terminal=True),
        "end-east": StoryNode(id="end-east", day_index=2, body="East: the loud delivery.",
                              summary="Delivered loudly in the east.", terminal=True),
    }
    return StoryPackage(character=make_character(), nodes=nodes, start="n0",
                        warmup_days=warmup_days)


def make_engine(package: StoryPackage | None = None, *,
                day_seconds: float = 10.0,
                keywords: tuple[str, ...] = ("crap",),
                rules: tuple[ScriptedRule, ...] = (),
                default_reply: str = "Noted.",
                corpus=None, log=None) -> LiveEngine:
    return LiveEngine(
        package if package is not None else make_package(),
        provider=ScriptedProvider(rules, default_reply),
        filters=FilterList.from_words(keywords),
        clock=VirtualClock(),
        corpus=corpus,
        log=log,
        day_seconds=day_seconds,
    )


@pytest.fixture
def engine() -> LiveEngine:
    eng = make_engine()
    eng.start()
    return eng


class ServerThread:
    """Run a FastAPI app under uvicorn on an ephemeral port, in-process."""

    def __init__(self, app):
        import uvicorn

        self._config = uvicorn.Config(app, host="127.0.0.1", port=0,
                                      log_level="warning", lifespan="off")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start within 10s")
            time.sleep(0.01)
        for server in self._server.servers:
            for sock in server.sockets:
                host, port = sock.getsockname()[:2]
                return f"http://{host}:{port}"
        raise RuntimeError("server has no bound socket")

    def __exit__(self, *exc) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)
