"""Pipeline orchestration, record persistence, adjustments, export, HTTP API."""

from .anchors import inject_anchors
from .api import SCHEMA_VERSION, create_app, serve_api
from .records import (
    Adjustment,
    ConflictError,
    RecordNotFoundError,
    RecordStore,
    SegmentRecord,
    ValidationError,
    export_records,
    extract_segments,
    save_grid_dumps,
    verify_provenance,
)

__all__ = [
    "inject_anchors", "SCHEMA_VERSION", "create_app", "serve_api",
    "Adjustment", "ConflictError", "RecordNotFoundError", "RecordStore",
    "SegmentRecord", "ValidationError", "export_records", "extract_segments",
    "save_grid_dumps", "verify_provenance",
]
