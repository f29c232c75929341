"""HTTP front door for the review store.

Reads are served straight from the in-memory fold; every mutation goes
through ReviewStore.apply_decision under one lock, so the journal stays
an honest serialization of what the API acknowledged. Error mapping:
unknown sentence -> 404, stale revision -> 409, failed validation -> 422.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import (
    MisalignedSpan,
    OverlapViolation,
    StaleRevision,
    UnknownSentence,
)
from .review import ACTIONS, STATUSES, ReviewRecord, ReviewStore

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>rapidner review</title></head>
<body>
<h1>rapidner review API</h1>
<p>No UI bundle is configured. Point <code>review serve --ui</code> at a
built frontend, or use the JSON API directly:</p>
<ul>
<li>GET /api/sentences?status=PENDING&amp;offset=0&amp;limit=50</li>
<li>GET /api/sentences/{sent_id}</li>
<li>POST /api/sentences/{sent_id}/decision</li>
<li>GET /api/progress</li>
<li>GET /api/types</li>
</ul>
</body></html>
"""


class SpanPayload(BaseModel):
    start: int
    end: int
    type: str
    item_id: int | None = None
    origin: str | None = None

    def to_store(self) -> dict:
        data = {"start": self.start, "end": self.end, "type": self.type}
        if self.item_id is not None:
            data["item_id"] = self.item_id
        if self.origin is not None:
            data["origin"] = self.origin
        return data


class DecisionBody(BaseModel):
    annotator_id: str = Field(min_length=1)
    revision: int
    action: str
    span: SpanPayload | None = None
    old_span: SpanPayload | None = None


def _record_view(record: ReviewRecord) -> dict:
    return {
        "sent_id": record.sent_id,
        "text": record.sentence.text,
        "source": record.sentence.source.value,
        "status": record.status,
        "revision": record.revision,
        "spans": [s.to_dict() for s in record.current_spans],
        "conflicts": [c.to_dict() for c in record.conflicts],
        "annotator_id": record.annotator_id,
    }


def create_app(store: ReviewStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="rapidner review", docs_url=None, redoc_url=None)
    write_lock = threading.Lock()

    @app.get("/api/sentences")
    def list_sentences(
        status: str | None = Query(default=None),
        type: str | None = Query(default=None),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=1, le=500),
    ):
        if status is not None and status not in STATUSES:
            raise HTTPException(status_code=422, detail=f"unknown status {status!r}")
        records = store.records(status=status, entity_type=type)
        page = records[offset : offset + limit]
        return {
            "total": len(records),
            "offset": offset,
            "limit": limit,
            "records": [_record_view(r) for r in page],
        }

    @app.get("/api/sentences/{sent_id}")
    def get_sentence(sent_id: str):
        try:
            return _record_view(store.get(sent_id))
        except UnknownSentence as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.post("/api/sentences/{sent_id}/decision")
    def post_decision(sent_id: str, body: DecisionBody):
        if body.action not in ACTIONS:
            raise HTTPException(status_code=422, detail=f"unknown action {body.action!r}")
        try:
            with write_lock:
                record = store.apply_decision(
                    sent_id,
                    body.annotator_id,
                    body.action,
                    revision=body.revision,
                    span=body.span.to_store() if body.span else None,
                    old_span=body.old_span.to_store() if body.old_span else None,
                )
        except UnknownSentence as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except StaleRevision as exc:
            return JSONResponse(
                status_code=409,
                content={
                    "detail": str(exc),
                    "record": _record_view(store.get(sent_id)),
                },
            )
        except (OverlapViolation, MisalignedSpan, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return _record_view(record)

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/types")
    def types():
        return {"types": store.type_config()}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app


def serve(
    store: ReviewStore,
    bind_address: str = "127.0.0.1:8686",
    ui_dir: str | Path | None = None,
) -> None:
    """Run the review API until interrupted."""
    import uvicorn

    host, _, port = bind_address.partition(":")
    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8686), log_level="info")
