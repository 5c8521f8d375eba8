"""FastAPI app implementing the gateway wire protocol.

POST /fill  {"text", "allowed_tokens", "top_k"} -> {"slots": [[{token, prob}]]}
POST /embed {"texts", "pooling": "mean"}        -> {"vectors", "dim"}
GET  /capabilities, GET /healthz
Malformed requests get 400; model failures get 500.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backend import DEFAULT_MODEL_ID, MASK_TOKEN, MaskedLMBackend

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServerConfig:
    model_id: str = DEFAULT_MODEL_ID
    host: str = "127.0.0.1"
    port: int = 8750
    max_batch_size: int = 16
    device: str = "cpu"


class FillPayload(BaseModel):
    text: str = Field(min_length=1)
    allowed_tokens: list[list[str] | None] | None = None
    top_k: int = Field(default=1, ge=1)


class EmbedPayload(BaseModel):
    texts: list[str] = Field(min_length=1)
    pooling: str = "mean"


def create_app(backend: MaskedLMBackend) -> FastAPI:
    app = FastAPI(title="litaug model server")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.exception_handler(ValueError)
    async def bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def model_failure(request: Request, exc: Exception):
        logger.exception("inference failure")
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.post("/fill")
    def fill(payload: FillPayload):
        if MASK_TOKEN not in payload.text:
            raise ValueError(f"text carries no {MASK_TOKEN} marker")
        slots = backend.fill(payload.text, payload.allowed_tokens, payload.top_k)
        return {
            "slots": [
                [{"token": token, "prob": prob} for token, prob in ranked] for ranked in slots
            ]
        }

    @app.post("/embed")
    def embed(payload: EmbedPayload):
        if payload.pooling != "mean":
            raise ValueError(f"unsupported pooling: {payload.pooling!r}")
        vectors = backend.embed(payload.texts)
        return {"vectors": vectors, "dim": backend.dim()}

    @app.get("/capabilities")
    def capabilities():
        return {
            "vocab_size": backend.vocab_size(),
            "dim": backend.dim(),
            "server_side_restriction": True,
            "model_id": backend.model_id,
        }

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    return app
