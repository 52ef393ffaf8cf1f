"""HTTP+JSON facade over the session service.

Error mapping: unknown sessions are 404, stage-machine violations are 409,
and every other validation failure (bad simplex, bad parameters, bad role)
is 422 with the offending detail.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .errors import StageOrderError, UnknownSessionError
from .sessions import SessionService
from .store import SessionStore


class CreateSessionBody(BaseModel):
    principles: list[str] | None = None
    epsilon: float = 0.1
    p: float = 2.0
    reference_index: int = 0


class SubmitBody(BaseModel):
    stage: str
    weights: list[float]


class SuggestBody(BaseModel):
    gamma_a: float
    gamma_c: float


class AdvanceBody(BaseModel):
    to_stage: str


def create_app(data_dir: str | Path) -> FastAPI:
    service = SessionService(SessionStore(data_dir))
    app = FastAPI(title="alignkit session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(UnknownSessionError)
    async def _unknown_session(request: Request, exc: UnknownSessionError):
        return JSONResponse(status_code=404, content={"detail": f"unknown session {exc}"})

    @app.exception_handler(StageOrderError)
    async def _stage_order(request: Request, exc: StageOrderError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _validation(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        record = service.create(
            body.principles, body.epsilon, body.p, body.reference_index
        )
        return {"session_id": record.session_id, "stage": record.stage.value}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get(session_id).to_dict()

    @app.post("/api/sessions/{session_id}/parties/{role}/allocations")
    def submit_allocation(session_id: str, role: str, body: SubmitBody):
        record = service.submit(session_id, role, body.stage, body.weights)
        return record.to_dict()

    @app.post("/api/sessions/{session_id}/suggest")
    def suggest(session_id: str, body: SuggestBody):
        return service.suggest(session_id, body.gamma_a, body.gamma_c)

    @app.post("/api/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody):
        return service.advance(session_id, body.to_stage).to_dict()

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str):
        return PlainTextResponse(
            service.export_csv(session_id), media_type="text/csv"
        )

    return app
