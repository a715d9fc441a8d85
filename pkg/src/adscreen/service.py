"""HTTP scoring service over a trained model container.

The container is loaded once at startup, held immutably, and shared
read-only by every request handler; a submitted description becomes a
single-utterance transcript and passes through the same frozen transform
the training code used for held-out documents.
"""

from __future__ import annotations

import logging
import os
from typing import Literal, Optional

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .chat import Demographics, Transcript, Utterance, clean_tokens
from .container import ModelContainer, load_container, score_transcript
from .errors import (
    AdscreenError,
    AllTokensOOVError,
    EmptyTextError,
    ModelNotLoadedError,
)

log = logging.getLogger(__name__)

DISCLAIMER = (
    "This result is a statistical screening signal derived from language "
    "use. It is not a medical diagnosis. Please discuss any concerns with "
    "a qualified clinician."
)


class ScreeningRequest(BaseModel):
    description_text: str
    age: float = Field(ge=0, le=130)
    gender: Literal["male", "female"]
    speaking_duration: float = Field(gt=0, description="seconds")


class ScreeningResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    probability: float
    risk_band: Literal["Low", "Elevated", "High"]
    model_version: str
    disclaimer: str


def risk_band(p: float, thresholds: tuple[float, float]) -> str:
    lo, hi = thresholds
    if p < lo:
        return "Low"
    if p < hi:
        return "Elevated"
    return "High"


class ModelState:
    """Mutable holder so a reload can swap the container in one assignment."""

    def __init__(self) -> None:
        self.container: Optional[ModelContainer] = None

    def load(self, path: str) -> bool:
        """Load a container; on any failure keep the previous one."""
        try:
            fresh = load_container(path)
        except (OSError, ValueError, KeyError, AdscreenError) as exc:
            log.warning("refusing model container %s: %s", path, exc)
            return False
        self.container = fresh
        return True

    def require(self) -> ModelContainer:
        if self.container is None:
            raise ModelNotLoadedError("no model container is loaded")
        return self.container


def request_transcript(req: ScreeningRequest) -> Transcript:
    tokens = clean_tokens(req.description_text.split())
    if not tokens:
        raise EmptyTextError("description is empty after cleaning")
    return Transcript(
        source_id="request",
        utterances=(Utterance(speaker="PAR", tokens=tuple(tokens)),),
        demographics=Demographics(age=req.age, gender=req.gender),
        audio_length=req.speaking_duration,
    )


def create_app(
    model_path: Optional[str] = None,
    allowed_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    app = FastAPI(title="adscreen screening service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(allowed_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    state = ModelState()
    app.state.model = state
    if model_path is not None:
        state.load(model_path)

    @app.exception_handler(EmptyTextError)
    @app.exception_handler(AllTokensOOVError)
    async def _bad_request(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ModelNotLoadedError)
    async def _unavailable(request, exc):
        return JSONResponse(status_code=503, content={"detail": str(exc)})

    @app.exception_handler(AdscreenError)
    async def _internal(request, exc):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/api/v1/health")
    def health() -> dict:
        c = state.container
        return {
            "loaded": c is not None,
            "version": None if c is None else c.version,
        }

    @app.get("/api/v1/model")
    def model_info() -> dict:
        c = state.require()
        return {
            "version": c.version,
            "config_hash": c.config_hash,
            "pipeline": c.pipeline,
            "schema": c.schema.to_descriptor(),
            "vocabulary_size": len(c.vocabulary),
            "risk_thresholds": list(c.risk_thresholds),
        }

    @app.post("/api/v1/score", response_model=ScreeningResponse)
    def score(req: ScreeningRequest) -> ScreeningResponse:
        c = state.require()
        p = score_transcript(c, request_transcript(req))
        return ScreeningResponse(
            probability=p,
            risk_band=risk_band(p, c.risk_thresholds),
            model_version=c.version,
            disclaimer=DISCLAIMER,
        )

    return app


def main() -> None:
    import uvicorn

    bind = os.environ.get("BIND_ADDR", "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    origins = tuple(
        o.strip()
        for o in os.environ.get("ALLOWED_ORIGINS", "*").split(",")
        if o.strip()
    )
    app = create_app(os.environ.get("MODEL_PATH"), allowed_origins=origins)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
