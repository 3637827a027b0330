"""HTTP face of the engine.

One FastAPI app per engine instance. Every handler is a thin adapter:
parse the body into a RawCapture or verification call, invoke the engine,
and shape the outcome. All engine errors surface as a JSON envelope
{"error": {"code", "message"}} with a status derived from the error code.
"""

from __future__ import annotations

import base64
import binascii
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .config import EngineConfig
from .domain import GeoPoint, parse_timestamp
from .encoder import RawCapture
from .engine import Engine, QueryOutcome
from .errors import InvalidArgumentError, SpatialMemError, UnanswerableError

_STATUS_BY_CODE = {
    "invalid_argument": 400,
    "missing_context": 400,
    "wrong_endpoint": 400,
    "unsupported_input": 400,
    "not_found": 404,
    "conflict": 409,
    "gate_rejected": 403,
    "unanswerable": 502,
    "provider_transport": 502,
    "malformed_output": 502,
}


class GpsBody(BaseModel):
    lat: float
    lon: float


class CaptureBody(BaseModel):
    user_id: str
    gps: GpsBody
    timestamp: str
    transcript: Optional[str] = None
    scene_text: Optional[str] = None
    image_b64: Optional[str] = None
    space_label: Optional[str] = None

    def to_capture(self) -> RawCapture:
        image = None
        if self.image_b64:
            try:
                image = base64.b64decode(self.image_b64, validate=True)
            except (binascii.Error, ValueError) as exc:
                raise InvalidArgumentError(f"image_b64 is not valid base64: {exc}")
        try:
            timestamp = parse_timestamp(self.timestamp)
        except ValueError as exc:
            raise InvalidArgumentError(str(exc))
        return RawCapture(
            user_id=self.user_id,
            gps=GeoPoint(self.gps.lat, self.gps.lon),
            timestamp=timestamp,
            transcript=self.transcript,
            scene_text=self.scene_text,
            image=image,
            space_label=self.space_label,
        )


class VerifyBody(BaseModel):
    user_id: str
    verification_id: str
    accept: bool
    replacement_answer: Optional[str] = None
    now: Optional[str] = None


class SeedBody(BaseModel):
    records: list[dict] = Field(default_factory=list)


def _outcome_payload(outcome: QueryOutcome) -> dict:
    return {
        "kind": outcome.kind,
        "classification": outcome.classification.to_dict(),
        "response": outcome.response.to_dict() if outcome.response else None,
        "routing": outcome.routing.value if outcome.routing else None,
        "verification_id": outcome.verification_id,
        "summary": outcome.summary,
        "stored_memory_id": outcome.stored_memory_id,
    }


def _memory_view(memory) -> dict:
    # Embedding vectors are internal; clients get everything else.
    view = memory.to_dict()
    view.pop("embeddings", None)
    return view


def _parse_now(raw: Optional[str]):
    if raw is None:
        return None
    try:
        return parse_timestamp(raw)
    except ValueError as exc:
        raise InvalidArgumentError(str(exc))


def create_app(
    config: Optional[EngineConfig] = None,
    engine: Optional[Engine] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    if engine is None:
        engine = Engine(config or EngineConfig())

    app = FastAPI(title="spatialmem", version=__version__)
    app.state.engine = engine

    @app.exception_handler(SpatialMemError)
    async def engine_error(request: Request, exc: SpatialMemError):
        body = {"error": {"code": exc.code, "message": exc.message}}
        if isinstance(exc, UnanswerableError) and exc.rationale:
            body["error"]["rationale"] = exc.rationale
        return JSONResponse(body, status_code=_STATUS_BY_CODE.get(exc.code, 500))

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/query")
    async def query(body: CaptureBody):
        return _outcome_payload(engine.handle_query(body.to_capture()))

    @app.post("/v1/remember")
    async def remember(body: CaptureBody):
        return _outcome_payload(engine.handle_remember(body.to_capture()))

    @app.post("/v1/forget")
    async def forget(body: CaptureBody):
        return _outcome_payload(engine.handle_forget(body.to_capture()))

    @app.post("/v1/verify")
    async def verify(body: VerifyBody):
        result = engine.resolve_verification(
            body.user_id,
            body.verification_id,
            body.accept,
            replacement_answer=body.replacement_answer,
            now=_parse_now(body.now),
        )
        return {
            "verification_id": result.verification_id,
            "outcome": result.outcome,
            "memory_id": result.memory_id,
        }

    @app.post("/v1/seed")
    async def seed(body: SeedBody):
        return {"stored": engine.seed(body.records)}

    @app.get("/v1/memories")
    async def memories(user_id: str = Query(...)):
        return {"memories": [_memory_view(m) for m in engine.memories(user_id)]}

    @app.get("/v1/pending")
    async def pending(user_id: str = Query(...), now: Optional[str] = Query(None)):
        entries = engine.pending(user_id, now=_parse_now(now))
        return {"pending": [e.to_dict() for e in entries]}

    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
