"""HTTP API over extraction and the annotation queue, plus UI asset serving.

Every non-2xx response body is a JSON error object {code, message}. All
annotation mutations flow through the store's single writer, so the decision
log is a complete audit of API activity.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import annotation
from .annotation import (
    AnnotationStore,
    IdenticalCorrection,
    LeaseViolation,
    NothingToExport,
    UnknownRecord,
)
from .config import ToolkitConfig
from .corpus import CorpusError, TriageNote
from .errors import VaxtriageError
from .labels import LabelError, VaccineLabel
from .lexicon import Lexicon, load_default_lexicon, load_lexicon
from .llm import load_system_prompt
from .rules import extract as rules_extract


class ExtractRequest(BaseModel):
    text: str
    age_years: int = 0
    age_months: int = 0
    id: str = "adhoc"
    engine: Optional[str] = None


class DecisionRequest(BaseModel):
    reviewer: str
    decision: str = Field(pattern="^(accept|correct|skip)$")
    label: Optional[str] = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _extract_payload(result) -> dict:
    label: dict = {"variant": result.label.variant.value}
    if result.label.canonical_id is not None:
        label["canonical_id"] = result.label.canonical_id
    if result.label.surface is not None:
        label["surface"] = result.label.surface
    payload: dict = {"label": label, "engine": result.engine}
    payload["matched_span"] = list(result.matched_span) if result.matched_span else None
    if result.raw_response is not None:
        payload["raw_response"] = result.raw_response
    if result.parse_failed:
        payload["parse_failed"] = True
    if result.unknown_surface:
        payload["unknown_surface"] = True
    return payload


def _record_payload(rec: annotation.AnnotationRecord) -> dict:
    return rec.to_dict()


def create_app(config: Optional[ToolkitConfig] = None) -> FastAPI:
    config = config or ToolkitConfig()
    config.validate()

    if config.lexicon_path is not None:
        with config.lexicon_path.open("rb") as fh:
            lexicon: Lexicon = load_lexicon(fh)
    else:
        lexicon = load_default_lexicon()

    store = AnnotationStore(
        config.store_path,
        lease_ttl=config.lease_ttl,
        second_opinion_fraction=config.second_opinion_fraction,
    )
    system_text = load_system_prompt()

    app = FastAPI(title="vaxtriage", version="0.1.0")
    app.state.store = store
    app.state.lexicon = lexicon
    app.state.config = config

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_: Request, exc: RequestValidationError):
        # keep the error contract uniform: every non-2xx body is {code, message}
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return _error(422, "validation_error", f"{where}: {first.get('msg', 'invalid request')}")

    @app.exception_handler(VaxtriageError)
    async def vaxtriage_error_handler(_: Request, exc: VaxtriageError):
        if isinstance(exc, UnknownRecord):
            return _error(404, "unknown_record", str(exc))
        if isinstance(exc, (LeaseViolation, NothingToExport)):
            return _error(409, "conflict", str(exc))
        if isinstance(exc, (IdenticalCorrection, CorpusError, LabelError)):
            return _error(400, "bad_request", str(exc))
        return _error(500, "internal_error", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/api/extract")
    async def api_extract(req: ExtractRequest):
        engine = req.engine or "rules"
        try:
            note = TriageNote(
                id=req.id, age_years=req.age_years, age_months=req.age_months, text=req.text
            )
        except CorpusError as exc:
            return _error(400, "bad_request", str(exc))
        if engine == "rules":
            result = rules_extract(note, lexicon, config.rules)
        elif engine == "llm":
            if config.endpoint is None:
                return _error(400, "no_endpoint", "no model endpoint configured")
            from .llm import extract_one

            result = extract_one(note, config.endpoint, lexicon, config.decoding)
        else:
            return _error(400, "bad_request", f"unknown engine {engine!r}")
        return _extract_payload(result)

    @app.get("/api/lexicon")
    async def api_lexicon():
        return {
            "version": lexicon.version,
            "canonical_ids": lexicon.canonical_ids(),
            "entries": [
                {"canonical_id": e.canonical_id, "kind": e.kind}
                for e in lexicon.entries
            ],
        }

    @app.get("/api/annotations/next")
    async def api_next(reviewer: str):
        rec = store.next_pending(reviewer)
        if rec is None:
            return Response(status_code=204)
        payload = _record_payload(rec)
        payload["needs_second_opinion"] = store.needs_second_opinion(rec.note.id)
        return payload

    @app.post("/api/annotations/{record_id}/decision")
    async def api_decision(record_id: str, req: DecisionRequest):
        label = None
        if req.label is not None:
            label = VaccineLabel.from_string(req.label, lexicon)
        rec = store.submit_decision(record_id, req.reviewer, req.decision, label)
        return _record_payload(rec)

    @app.post("/api/annotations/{record_id}/second-opinion")
    async def api_second_opinion(record_id: str, req: DecisionRequest):
        if req.label is None:
            return _error(400, "bad_request", "second opinion requires a label")
        label = VaccineLabel.from_string(req.label, lexicon)
        rec = store.submit_second_opinion(record_id, req.reviewer, label)
        return _record_payload(rec)

    @app.get("/api/annotations/stats")
    async def api_stats():
        stats = store.stats()
        overall = annotation.agreement_overall(store, lexicon)
        stats["agreement"] = None if overall is None else {
            "dual_reviewed": overall[0],
            "ratio": overall[1],
        }
        return stats

    @app.get("/api/export")
    async def api_export():
        payload, _ = annotation.export_dataset(store, lexicon, system_text)
        return PlainTextResponse(payload, media_type="application/x-ndjson")

    @app.get("/api/export/manifest")
    async def api_export_manifest():
        _, manifest = annotation.export_dataset(store, lexicon, system_text)
        return manifest

    if config.ui_asset_path is not None:
        app.mount(
            "/", StaticFiles(directory=str(config.ui_asset_path), html=True), name="ui"
        )

    return app


def serve(config: ToolkitConfig) -> None:
    """Run the service until interrupted; graceful shutdown is uvicorn's default."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port)
