"""Segment record extraction, persistence, adjustment, and CSV export.

extract_segments runs the full per-filing pipeline: parse tables, drop
non-financial ones, apply the TF-IDF window filter, classify each row-header
path, and emit one record per (operating row, period column) body cell. Every
record carries cell-level provenance (table, row, column) and a content-hash
id, so re-extraction is idempotent and the review UI can link records back to
their source cells.

Adjustments never mutate the extracted value: they append to an audit trail
and set adjusted_value, with optimistic concurrency via the expected audit
length.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..header_classifier.model import ModelParams
from ..header_classifier.text import OPERATING
from ..header_classifier.train import predict
from ..ingestion import FilingDoc
from ..normalizer import (
    FiscalCalendar,
    NormalizedValue,
    detect_scale,
    normalize_amount,
    normalize_number,
    normalize_period,
)
from ..segment_filter import TfidfMatrix, has_financial_content, score_table
from ..table_parser import (
    BodyRect,
    Grid,
    HeaderPath,
    NoBodyError,
    detect_body_rect,
    dump_grid,
    extract_headers,
    infer_header_hierarchy,
    parse_html_tables,
)

logger = logging.getLogger(__name__)

_PERIOD_FRAGMENT_RE = re.compile(
    r"\b(?:three|six|nine|twelve)\s+months?\b|\bended\b|\bfiscal\b", re.IGNORECASE
)


class RecordNotFoundError(KeyError):
    pass


class ConflictError(Exception):
    """The supplied audit length is stale; someone adjusted first."""


class ValidationError(ValueError):
    pass


@dataclass
class Adjustment:
    record_id: str
    new_value: Decimal
    author: str
    at: datetime
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "new_value": str(self.new_value),
            "author": self.author,
            "at": self.at.isoformat(),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Adjustment":
        return cls(
            record_id=payload["record_id"],
            new_value=Decimal(payload["new_value"]),
            author=payload["author"],
            at=datetime.fromisoformat(payload["at"]),
            note=payload.get("note"),
        )


@dataclass
class SegmentRecord:
    record_id: str
    filing_id: str
    table_id: str
    header_path: HeaderPath
    period: NormalizedValue
    metric_name: str
    value: NormalizedValue
    currency: str
    source_cell: tuple[str, int, int]
    classifier_probability: float
    adjusted: bool = False
    adjusted_value: Optional[Decimal] = None
    audit: list[Adjustment] = field(default_factory=list)

    def effective_value_text(self) -> str:
        if self.adjusted:
            return f"{self.adjusted_value:,.2f}"
        if self.value.kind == "amount":
            return f"{self.value.amount[0]:,.2f}"
        return self.value.render()

    def to_dict(self) -> dict:
        value: dict = {"kind": self.value.kind, "raw": self.value.raw}
        if self.value.kind == "amount":
            amount, currency, scale = self.value.amount
            value.update({"value": str(amount), "currency": currency, "scale": scale})
        elif self.value.kind == "percent":
            value["value"] = str(self.value.percent)
        label, year = self.period.period
        return {
            "record_id": self.record_id,
            "filing_id": self.filing_id,
            "table_id": self.table_id,
            "header_path": self.header_path.render(),
            "period": {"label": label, "year": year, "raw": self.period.raw},
            "metric_name": self.metric_name,
            "value": value,
            "currency": self.currency,
            "source_cell": list(self.source_cell),
            "classifier_probability": self.classifier_probability,
            "adjusted": self.adjusted,
            "adjusted_value": str(self.adjusted_value) if self.adjusted else None,
            "audit": [a.to_dict() for a in self.audit],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SegmentRecord":
        value_payload = payload["value"]
        if value_payload["kind"] == "amount":
            value = NormalizedValue(
                kind="amount",
                raw=value_payload["raw"],
                amount=(
                    Decimal(value_payload["value"]),
                    value_payload["currency"],
                    int(value_payload["scale"]),
                ),
            )
        elif value_payload["kind"] == "percent":
            value = NormalizedValue(
                kind="percent", raw=value_payload["raw"],
                percent=Decimal(value_payload["value"]),
            )
        else:
            value = NormalizedValue.text(value_payload["raw"])
        period = NormalizedValue(
            kind="period", raw=payload["period"]["raw"],
            period=(payload["period"]["label"], int(payload["period"]["year"])),
        )
        return cls(
            record_id=payload["record_id"],
            filing_id=payload["filing_id"],
            table_id=payload["table_id"],
            header_path=HeaderPath.from_rendered(payload["header_path"]),
            period=period,
            metric_name=payload["metric_name"],
            value=value,
            currency=payload["currency"],
            source_cell=(
                payload["source_cell"][0],
                int(payload["source_cell"][1]),
                int(payload["source_cell"][2]),
            ),
            classifier_probability=float(payload["classifier_probability"]),
            adjusted=bool(payload["adjusted"]),
            adjusted_value=(
                Decimal(payload["adjusted_value"]) if payload["adjusted"] else None
            ),
            audit=[Adjustment.from_dict(a) for a in payload["audit"]],
        )


def _record_id(filing_id: str, table_id: str, row: int, col: int, period: str) -> str:
    key = f"{filing_id}|{table_id}|{row}|{col}|{period}"
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def _is_period_fragment(text: str, cal: FiscalCalendar) -> bool:
    if normalize_period(text, cal) is not None:
        return True
    return bool(_PERIOD_FRAGMENT_RE.search(text))


def _column_periods(
    col_chains, cal: FiscalCalendar
) -> tuple[list[Optional[NormalizedValue]], list[str]]:
    """Per body column: the normalized period and the non-period group label."""
    periods = []
    group_labels = []
    for chain in col_chains:
        texts = [cell.text for cell in chain]
        joined = " ".join(texts)
        periods.append(normalize_period(joined, cal) if joined else None)
        label = ""
        for text in texts:
            if not _is_period_fragment(text, cal):
                label = text
                break
        group_labels.append(label)
    return periods, group_labels


def extract_segments(
    filing: FilingDoc,
    model: ModelParams,
    matrix: TfidfMatrix,
    delta: float,
    calendar: Optional[FiscalCalendar] = None,
    threshold: float = 0.5,
    density_threshold: float = 0.6,
) -> list[SegmentRecord]:
    """Run the pipeline on one earnings filing and emit segment records.

    Non-earnings filings produce an empty list with a warning. Failures in
    one table are logged and isolated; the remaining tables still extract.
    """
    if not filing.is_earnings:
        logger.warning("filing %s is not an earnings report; nothing to extract",
                       filing.filing_id)
        return []
    if model.vocab is None:
        raise ValueError("classifier model carries no vocabulary")
    cal = calendar or FiscalCalendar(filing.company_id, 12)
    records: list[SegmentRecord] = []
    for grid in parse_html_tables(filing.body):
        try:
            records.extend(
                _extract_from_grid(
                    grid, filing, model, matrix, delta, cal, threshold,
                    density_threshold,
                )
            )
        except Exception:  # noqa: BLE001 - per-table isolation is the contract
            logger.exception(
                "filing %s table %s failed; skipping", filing.filing_id, grid.table_id
            )
    return records


def _extract_from_grid(
    grid: Grid,
    filing: FilingDoc,
    model: ModelParams,
    matrix: TfidfMatrix,
    delta: float,
    cal: FiscalCalendar,
    threshold: float,
    density_threshold: float,
) -> list[SegmentRecord]:
    if not has_financial_content(grid):
        return []
    score = score_table(grid, filing.company_id, matrix, delta)
    if not score.emitted:
        return []
    try:
        body = detect_body_rect(grid, density_threshold)
    except NoBodyError:
        return []
    row_chains, col_chains = extract_headers(grid, body)
    paths = infer_header_hierarchy(row_chains)
    periods, group_labels = _column_periods(col_chains, cal)

    texts = [p.render() for p in paths if p is not None]
    if not texts:
        return []
    predictions = iter(predict(texts, model.vocab, model, threshold))
    labels = [next(predictions) if p is not None else None for p in paths]

    scale, currency = detect_scale(
        grid.caption_context,
        [c.text for row in grid.cells for c in row if c.text and not c.is_numeric],
    )

    records = []
    for i, path in enumerate(paths):
        if path is None:
            continue
        label, probability = labels[i]
        if label != OPERATING:
            continue
        row = body.top + i
        for j, period in enumerate(periods):
            if period is None:
                continue
            col = body.left + j
            cell = grid.cells[row][col]
            if not cell.text or not cell.is_numeric:
                continue
            value = normalize_amount(cell.text, scale, currency)
            if value is None:
                value = normalize_number(cell.text)
                if value.kind != "percent":
                    continue
            if len(path.segments) > 1:
                metric = path.segments[-2]
            else:
                metric = group_labels[j]
            records.append(
                SegmentRecord(
                    record_id=_record_id(
                        filing.filing_id, grid.table_id, row, col, period.render()
                    ),
                    filing_id=filing.filing_id,
                    table_id=grid.table_id,
                    header_path=path,
                    period=period,
                    metric_name=metric,
                    value=value,
                    currency=currency if value.kind == "amount" else "",
                    source_cell=(grid.table_id, row, col),
                    classifier_probability=probability,
                )
            )
    return records


def verify_provenance(
    filing: FilingDoc, records: Sequence[SegmentRecord],
) -> list[str]:
    """Check that every record's source cell re-normalizes to its value.

    Returns a list of human-readable violations; empty means all provenance
    holds.
    """
    grids = {g.table_id: g for g in parse_html_tables(filing.body)}
    problems = []
    for record in records:
        table_id, row, col = record.source_cell
        grid = grids.get(table_id)
        if grid is None:
            problems.append(f"{record.record_id}: table {table_id} missing")
            continue
        if not (0 <= row < grid.n_rows and 0 <= col < grid.n_cols):
            problems.append(f"{record.record_id}: cell ({row},{col}) out of range")
            continue
        cell = grid.cells[row][col]
        if not cell.is_numeric:
            problems.append(f"{record.record_id}: cell ({row},{col}) not numeric")
            continue
        if record.value.kind == "amount":
            scale = record.value.amount[2]
            redone = normalize_amount(cell.text, scale, record.value.amount[1])
            if redone is None or redone.amount[0] != record.value.amount[0]:
                problems.append(
                    f"{record.record_id}: cell text {cell.text!r} does not "
                    f"normalize to {record.value.amount[0]}"
                )
        elif record.value.kind == "percent":
            redone = normalize_number(cell.text)
            if redone.kind != "percent" or redone.percent != record.value.percent:
                problems.append(
                    f"{record.record_id}: cell text {cell.text!r} is not "
                    f"{record.value.percent}%"
                )
    return problems


class RecordStore:
    """One JSONL file of records per filing; writes are atomic and locked."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.records_dir = self.root / "records"
        self.records_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, filing_id: str) -> Path:
        return self.records_dir / f"{filing_id}.jsonl"

    def save_records(self, filing_id: str, records: Sequence[SegmentRecord]) -> None:
        with self._lock:
            self._write(filing_id, records)

    def _write(self, filing_id: str, records: Sequence[SegmentRecord]) -> None:
        payload = "".join(
            json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records
        )
        tmp = self._path(filing_id).with_suffix(".tmp")
        tmp.write_text(payload, encoding="utf-8")
        tmp.replace(self._path(filing_id))

    def load_records(self, filing_id: str) -> list[SegmentRecord]:
        path = self._path(filing_id)
        if not path.exists():
            return []
        return [
            SegmentRecord.from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def filing_ids(self) -> list[str]:
        return sorted(p.stem for p in self.records_dir.glob("*.jsonl"))

    def all_records(self) -> Iterable[tuple[str, SegmentRecord]]:
        for filing_id in self.filing_ids():
            for record in self.load_records(filing_id):
                yield filing_id, record

    def find(self, record_id: str) -> tuple[str, SegmentRecord]:
        for filing_id, record in self.all_records():
            if record.record_id == record_id:
                return filing_id, record
        raise RecordNotFoundError(record_id)

    def apply_adjustment(
        self,
        record_id: str,
        new_value: Decimal,
        author: str,
        note: Optional[str] = None,
        expected_audit_length: Optional[int] = None,
        at: Optional[datetime] = None,
    ) -> SegmentRecord:
        """Append an adjustment; the original extracted value is never touched."""
        if not isinstance(new_value, Decimal):
            try:
                new_value = Decimal(str(new_value))
            except InvalidOperation as exc:
                raise ValidationError(f"unparseable value {new_value!r}") from exc
        if not new_value.is_finite():
            raise ValidationError(f"non-finite adjustment value {new_value}")
        with self._lock:
            filing_id, record = self.find(record_id)
            if (
                expected_audit_length is not None
                and expected_audit_length != len(record.audit)
            ):
                raise ConflictError(
                    f"record {record_id}: expected audit length "
                    f"{expected_audit_length}, actual {len(record.audit)}"
                )
            when = at or datetime.now(timezone.utc)
            if record.audit and when < record.audit[-1].at:
                when = record.audit[-1].at
            record.audit.append(
                Adjustment(
                    record_id=record_id, new_value=new_value, author=author,
                    at=when, note=note,
                )
            )
            record.adjusted = True
            record.adjusted_value = new_value
            records = self.load_records(filing_id)
            records = [record if r.record_id == record_id else r for r in records]
            self._write(filing_id, records)
        return record


EXPORT_COLUMNS = (
    "company,filing,period,segment_path,metric,value,currency,adjusted,"
    "source_table,source_row,source_col"
)


def export_records(
    records: Sequence[tuple[str, SegmentRecord]],
    company_of_filing: dict[str, str],
    company: Optional[str] = None,
    period: Optional[str] = None,
    segment: Optional[str] = None,
) -> str:
    """Render records as RFC-4180 CSV, adjusted values taking precedence.

    `records` pairs each record with its filing id. Filters: exact company id,
    exact rendered period, case-insensitive substring on the segment path.
    Rows are sorted by (company, period, segment path).
    """
    import csv as _csv
    import io as _io

    rows = []
    for filing_id, record in records:
        row_company = company_of_filing.get(filing_id, "")
        rendered_period = record.period.render()
        path = record.header_path.render()
        if company is not None and row_company != company:
            continue
        if period is not None and rendered_period != period:
            continue
        if segment is not None and segment.lower() not in path.lower():
            continue
        rows.append(
            (
                row_company, filing_id, rendered_period, path, record.metric_name,
                record.effective_value_text(), record.currency,
                "true" if record.adjusted else "false",
                record.source_cell[0], record.source_cell[1], record.source_cell[2],
            )
        )
    rows.sort(key=lambda r: (r[0], r[2], r[3], r[1], r[8], r[9], r[10]))
    buffer = _io.StringIO()
    writer = _csv.writer(buffer)
    writer.writerow(EXPORT_COLUMNS.split(","))
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def save_grid_dumps(filing: FilingDoc, root: str | Path) -> list[Path]:
    """Persist per-table grid dumps for debugging and provenance checks."""
    out_dir = Path(root) / "grids" / filing.filing_id
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for grid in parse_html_tables(filing.body):
        path = out_dir / f"{grid.table_id}.txt"
        path.write_text(dump_grid(grid), encoding="utf-8")
        paths.append(path)
    return paths
