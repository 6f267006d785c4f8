"""HTTP service: POST /embed returns 768-dimensional sentence vectors in
request order; GET /health reports readiness. The encoder is loaded once
at startup and frozen for the process lifetime."""

from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .encoder import EMBED_DIM, Encoder, load_encoder

logger = logging.getLogger(__name__)

ENV_PORT = "NCG_EMBED_PORT"
ENV_ENCODER = "NCG_EMBED_ENCODER"
DEFAULT_PORT = 8764
MAX_BATCH = 256
MAX_TEXT_CHARS = 8192


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(encoder: Encoder | None = None, encoder_spec: str | None = None) -> FastAPI:
    """Build the service; the encoder loads on startup unless one is
    injected (tests inject to skip model resolution)."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.encoder is None:
            spec = encoder_spec or os.environ.get(ENV_ENCODER, "auto")
            app.state.encoder = load_encoder(spec)
        logger.info("encoder ready: %s", app.state.encoder.encoder_id)
        yield

    app = FastAPI(title="ncg-embed-sidecar", lifespan=lifespan)
    app.state.encoder = encoder

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed body"})

    @app.get("/health")
    async def health():
        if app.state.encoder is None:
            return JSONResponse(
                status_code=503, content={"status": "loading", "dim": EMBED_DIM}
            )
        return {
            "status": "ok",
            "encoder_id": app.state.encoder.encoder_id,
            "dim": EMBED_DIM,
        }

    @app.post("/embed")
    async def embed(request: EmbedRequest):
        if app.state.encoder is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        texts = request.texts
        if not texts:
            return JSONResponse(status_code=400, content={"detail": "texts must be nonempty"})
        if len(texts) > MAX_BATCH:
            return JSONResponse(
                status_code=413,
                content={"detail": f"batch of {len(texts)} exceeds limit {MAX_BATCH}"},
            )
        for i, text in enumerate(texts):
            if not text.strip():
                return JSONResponse(
                    status_code=400, content={"detail": f"texts[{i}] is empty"}
                )
            if len(text) > MAX_TEXT_CHARS:
                return JSONResponse(
                    status_code=400,
                    content={"detail": f"texts[{i}] exceeds {MAX_TEXT_CHARS} characters"},
                )
        vectors = app.state.encoder.encode(texts)
        return {
            "vectors": vectors.tolist(),
            "encoder_id": app.state.encoder.encoder_id,
            "dim": EMBED_DIM,
        }

    return app


def main() -> None:
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    port = int(os.environ.get(ENV_PORT, DEFAULT_PORT))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
