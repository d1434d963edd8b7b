"""HTTP API for the review workflow.

Read endpoints are side-effect-free; the only write is posting an adjustment,
which is guarded by an optimistic concurrency token (the audit length the
client last saw). All JSON responses carry schema_version; the raw document
response carries it as an X-Schema-Version header.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse

from ..ingestion import FilingNotFoundError, FilingStore
from .anchors import inject_anchors
from .records import ConflictError, RecordNotFoundError, RecordStore, ValidationError, export_records

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def create_app(store_root: str | Path) -> FastAPI:
    store_root = Path(store_root)
    filings = FilingStore(store_root)
    records = RecordStore(store_root)
    app = FastAPI(title="segment extraction service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(
            {"schema_version": SCHEMA_VERSION, "error": message}, status_code=status
        )

    @app.get("/filings")
    def list_filings():
        metadata = filings.metadata()
        return {
            "schema_version": SCHEMA_VERSION,
            "filings": [
                {
                    "filing_id": filing_id,
                    "company_id": meta["company_id"],
                    "sector": meta["sector"],
                    "doc_type": meta["doc_type"],
                    "filed_at": meta["filed_at"],
                    "is_earnings": meta["is_earnings"],
                    "n_records": len(records.load_records(filing_id)),
                }
                for filing_id, meta in sorted(metadata.items())
            ],
        }

    @app.get("/filings/{filing_id}/document")
    def get_document(filing_id: str):
        try:
            doc = filings.load(filing_id)
        except FilingNotFoundError:
            return _error(404, f"unknown filing {filing_id}")
        return HTMLResponse(
            inject_anchors(doc.body),
            headers={"X-Schema-Version": str(SCHEMA_VERSION)},
        )

    @app.get("/filings/{filing_id}/segments")
    def get_segments(filing_id: str):
        try:
            filings.load(filing_id)
        except FilingNotFoundError:
            return _error(404, f"unknown filing {filing_id}")
        return {
            "schema_version": SCHEMA_VERSION,
            "filing_id": filing_id,
            "records": [r.to_dict() for r in records.load_records(filing_id)],
        }

    @app.post("/records/{record_id}/adjustments")
    async def post_adjustment(record_id: str, request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "body is not valid JSON")
        if not isinstance(payload, dict):
            return _error(400, "body must be a JSON object")
        new_value = payload.get("new_value")
        author = payload.get("author")
        expected = payload.get("expected_audit_length")
        if new_value is None or not isinstance(author, str) or not author:
            return _error(400, "new_value and author are required")
        if expected is not None and not isinstance(expected, int):
            return _error(400, "expected_audit_length must be an integer")
        try:
            record = records.apply_adjustment(
                record_id,
                new_value,
                author,
                note=payload.get("note"),
                expected_audit_length=expected,
            )
        except RecordNotFoundError:
            return _error(404, f"unknown record {record_id}")
        except ValidationError as exc:
            return _error(400, str(exc))
        except ConflictError as exc:
            return _error(409, str(exc))
        return {"schema_version": SCHEMA_VERSION, "record": record.to_dict()}

    @app.get("/export")
    def export(
        company: Optional[str] = None,
        period: Optional[str] = None,
        segment: Optional[str] = None,
    ):
        metadata = filings.metadata()
        company_of_filing = {fid: meta["company_id"] for fid, meta in metadata.items()}
        csv_text = export_records(
            list(records.all_records()), company_of_filing,
            company=company, period=period, segment=segment,
        )
        return PlainTextResponse(
            csv_text, media_type="text/csv",
            headers={"X-Schema-Version": str(SCHEMA_VERSION)},
        )

    return app


def serve_api(store_root: str | Path, port: int = 8000, host: str = "127.0.0.1") -> None:
    """Run the service; blocks until interrupted."""
    import uvicorn

    uvicorn.run(create_app(store_root), host=host, port=port, log_level="info")
