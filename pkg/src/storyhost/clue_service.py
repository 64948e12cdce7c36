"""Standalone clue-matching microservice.

Same matcher the in-process pipeline uses, wrapped in three endpoints so a
deployment can keep its spoiler corpus on a private host. Corpus replacement
is an atomic reference swap; queries in flight finish against the corpus
they started with.
"""
from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .clues import ClueCorpus, DEFAULT_THRESHOLD, parse_corpus
from .errors import EngineError


class MatchBody(BaseModel):
    sentence: str


def create_clue_app(corpus: ClueCorpus, *,
                    threshold: float = DEFAULT_THRESHOLD) -> FastAPI:
    app = FastAPI(title="storyhost clue service", docs_url=None, redoc_url=None)
    app.state.corpus = corpus

    @app.exception_handler(EngineError)
    def engine_error(_req: Request, exc: EngineError) -> JSONResponse:
        return JSONResponse(status_code=400,
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
        return {"status": "ok", "entries": len(app.state.corpus.entries)}

    @app.post("/match")
    def match(body: MatchBody) -> Response:
        found = app.state.corpus.find(body.sentence, threshold)
        if found is None:
            return Response(status_code=204)
        entry = found.entry
        return JSONResponse(content={
            "id": entry.id,
            "score": found.score,
            "reply_text": entry.reply_text,
            "image_url": entry.image_url,
        })

    @app.put("/corpus")
    def replace_corpus(entries: list[dict]) -> dict:
        try:
            app.state.corpus = ClueCorpus(parse_corpus(entries),
                                          backend=corpus.backend)
        except (ValueError, TypeError, KeyError) as exc:
            raise EngineError(str(exc), code="invalid-corpus") from exc
        return {"entries": len(app.state.corpus.entries)}

    return app
