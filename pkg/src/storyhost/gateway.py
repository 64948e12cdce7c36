"""HTTP boundary around a running engine.

Every mutating endpoint funnels into the engine's serialized entry points;
the gateway itself keeps no story state beyond the session-token table. The
event stream is a long-lived NDJSON response fed from a per-subscriber
queue — a subscriber that stops reading gets disconnected rather than
holding everyone else up.
"""
from __future__ import annotations

import json
import queue
import threading
import uuid
from typing import Iterator

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .engine import LiveEngine
from .errors import EngineError
from .narrative import StoryNode
from .votes import tally_votes

STREAM_QUEUE_SIZE = 256

# Engine error code → HTTP status. Anything unlisted is the client's fault.
_STATUS = {
    "voting-closed": 409,
    "invalid-choice": 409,
    "story-finished": 409,
    "provider-unavailable": 503,
}


class JoinBody(BaseModel):
    display_name: str = "guest"


class VoteBody(BaseModel):
    choice_index: int


class ChatBody(BaseModel):
    text: str
    channel: str = "main"


class ClockBody(BaseModel):
    virtual_now: float


class CanonBody(BaseModel):
    fact: str


def _node_payload(node: StoryNode) -> dict:
    return {
        "id": node.id,
        "day_index": node.day_index,
        "body": node.body,
        "summary": node.summary,
        "illustrations": list(node.illustrations),
        "choices": [{"index": c.index, "emoji": c.emoji, "caption": c.caption}
                    for c in node.choices],
        "terminal": node.terminal,
    }


def create_gateway_app(engine: LiveEngine, *, admin_token: str | None = None,
                       heartbeat_seconds: float = 10.0) -> FastAPI:
    """Wrap a started engine in the public HTTP surface.

    ``admin_token`` of None leaves the admin endpoints open — simulation and
    development mode only.
    """
    if not engine.started:
        raise RuntimeError("start the engine before serving it")

    app = FastAPI(title="storyhost gateway", docs_url=None, redoc_url=None)
    app.state.engine = engine
    sessions: dict[str, dict] = {}
    sessions_lock = threading.Lock()

    def require_user(x_user_token: str | None = Header(default=None)) -> dict:
        with sessions_lock:
            session = sessions.get(x_user_token or "")
        if session is None:
            raise EngineError("missing or unknown user token", code="unauthorized")
        return session

    def require_admin(x_admin_token: str | None = Header(default=None)) -> None:
        if admin_token is not None and x_admin_token != admin_token:
            raise EngineError("admin token required", code="unauthorized")

    @app.exception_handler(EngineError)
    def engine_error(_req: Request, exc: EngineError) -> JSONResponse:
        status = 401 if exc.code == "unauthorized" else _STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    def bad_request(_req: Request, exc: RequestValidationError) -> JSONResponse:
        # exc.errors() may hold the raw (non-JSON-serializable) input, so
        # flatten to a plain string like the EngineError envelope uses.
        detail = "; ".join(
            ".".join(str(part) for part in err.get("loc", ())) + ": " + err.get("msg", "invalid")
            for err in exc.errors())
        return JSONResponse(status_code=400,
                            content={"code": "malformed-request",
                                     "detail": detail or "invalid request"})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "finished": engine.finished}

    @app.post("/join")
    def join(body: JoinBody) -> dict:
        token = uuid.uuid4().hex
        user_id = f"u-{uuid.uuid4().hex[:12]}"
        with sessions_lock:
            sessions[token] = {"user_id": user_id,
                               "display_name": body.display_name}
        return {"token": token, "user_id": user_id,
                "display_name": body.display_name}

    @app.get("/story/feed")
    def story_feed() -> dict:
        snap = engine.snapshot()
        released = snap["story"]["released"] if snap["story"] else []
        return {
            "character": {"name": engine.character.name},
            "nodes": [_node_payload(engine.package.nodes[nid]) for nid in released],
            "finished": engine.finished,
        }

    @app.get("/story/current")
    def story_current() -> dict:
        day = engine.day
        state = engine.story_state
        node = engine.package.nodes[state.current] if state else None
        payload: dict = {
            "finished": engine.finished,
            "now": engine.clock.now(),
            "node": _node_payload(node) if node else None,
        }
        if day is not None:
            tally = tally_votes(day)
            payload.update({
                "day_index": day.day_index,
                "opened_at": day.opened_at,
                "closes_at": day.closes_at,
                "tally": {str(k): v for k, v in tally.counts.items()},
                "voters": tally.voters,
            })
        return payload

    @app.post("/story/vote")
    def story_vote(body: VoteBody, user: dict = Depends(require_user)) -> dict:
        tally = engine.cast_vote(user["user_id"], body.choice_index)
        return {"tally": {str(k): v for k, v in tally.counts.items()},
                "voters": tally.voters}

    @app.post("/chat")
    def chat(body: ChatBody, user: dict = Depends(require_user)) -> dict:
        post, trace = engine.handle_chat(body.channel, user["user_id"], body.text)
        return {"reply": post.text, "illustrations": list(post.illustrations),
                "channel": post.channel, "trace_id": trace.trace_id}

    @app.get("/trace/{trace_id}")
    def trace(trace_id: str, _: None = Depends(require_admin)) -> JSONResponse:
        found = engine.traces.get(trace_id)
        if found is None:
            return JSONResponse(status_code=404,
                                content={"code": "unknown-trace"})
        return JSONResponse(content=found.to_dict())

    @app.post("/admin/close-day")
    def admin_close(_: None = Depends(require_admin)) -> dict:
        release = engine.force_close()
        return {"released": release.node_id, "day_index": release.day_index,
                "finished": engine.finished}

    @app.post("/admin/clock")
    def admin_clock(body: ClockBody, _: None = Depends(require_admin)) -> dict:
        try:
            now = engine.set_clock(body.virtual_now)
        except RuntimeError as exc:
            raise EngineError(str(exc), code="clock-not-adjustable") from exc
        releases = engine.tick()
        return {"now": now, "released": [r.node_id for r in releases],
                "finished": engine.finished}

    @app.post("/admin/canonize")
    def admin_canonize(body: CanonBody, _: None = Depends(require_admin)) -> dict:
        engine.canonize(body.fact)
        return {"canon_facts": list(engine.character.canon_facts)}

    @app.get("/events")
    def events() -> StreamingResponse:
        return StreamingResponse(_event_stream(engine, heartbeat_seconds),
                                 media_type="application/x-ndjson")

    return app


def _event_stream(engine: LiveEngine, heartbeat_seconds: float) -> Iterator[str]:
    q: queue.Queue[dict] = queue.Queue(maxsize=STREAM_QUEUE_SIZE)
    too_slow = threading.Event()

    def push(record: dict) -> None:
        try:
            q.put_nowait(record)
        except queue.Full:
            too_slow.set()

    unsubscribe = engine.subscribe(push)
    try:
        yield json.dumps({"kind": "stream_open", "ts": engine.clock.now()},
                         sort_keys=True) + "\n"
        while not too_slow.is_set():
            try:
                record = q.get(timeout=heartbeat_seconds)
            except queue.Empty:
                yield json.dumps({"kind": "heartbeat"}) + "\n"
                continue
            yield json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"
    finally:
        unsubscribe()
