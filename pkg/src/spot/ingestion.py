"""Filing ingestion: feed polling, earnings classification, raw storage.

Feeds are local stand-ins for a live wire: either an RSS/Atom-style XML file
whose items carry path/company/sector/doctype/published children, or a plain
directory of .html files. Polling is idempotent; entries already returned once
are remembered in a sidecar state file keyed by the feed source.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from pathlib import Path
from typing import Optional, Sequence
from xml.etree import ElementTree

logger = logging.getLogger(__name__)

SECTORS = ("Tech", "Media", "Retail", "OilGas", "MetalsMining", "Chemicals")
CONSUMER_SECTORS = ("Tech", "Media", "Retail")
COMMODITY_SECTORS = ("OilGas", "MetalsMining", "Chemicals")

DOC_TYPES = ("8-K", "10-Q", "10-K", "other")

DEFAULT_EARNINGS_KEYWORDS = (
    "results of operations",
    "earnings",
    "quarterly results",
    "net sales",
    "revenue",
)

_TAG_RE = re.compile(r"<[^>]+>")


class FeedUnavailableError(Exception):
    """The feed source cannot be read at all."""


class FeedParseError(Exception):
    """The feed exists but its XML or an entry inside it is malformed."""


class DuplicateFilingError(Exception):
    pass


class FilingNotFoundError(KeyError):
    pass


@dataclass
class FeedEntry:
    path_or_url: str
    company_id: str
    doc_type: str
    published_at: datetime
    sector: str = ""


@dataclass
class FilingDoc:
    """One raw filing with its metadata and earnings flag."""

    filing_id: str
    company_id: str
    sector: str
    doc_type: str
    filed_at: datetime
    body: str
    is_earnings: bool = False

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError(f"filing {self.filing_id}: empty body")
        if self.sector not in SECTORS:
            raise ValueError(
                f"filing {self.filing_id}: sector {self.sector!r} not one of {SECTORS}"
            )


def classify_earnings(
    doc: FilingDoc, keywords: Sequence[str] = DEFAULT_EARNINGS_KEYWORDS
) -> bool:
    """8-K containing at least one earnings keyword (case-insensitive)."""
    if doc.doc_type != "8-K":
        return False
    text = _TAG_RE.sub(" ", doc.body).lower()
    return any(kw.lower() in text for kw in keywords)


def _parse_timestamp(raw: str) -> datetime:
    raw = raw.strip()
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        dt = parsedate_to_datetime(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _entry_text(elem: ElementTree.Element, *names: str) -> Optional[str]:
    for name in names:
        child = elem.find(name)
        if child is not None and child.text:
            return child.text.strip()
    return None


def _parse_feed_xml(path: Path) -> list[FeedEntry]:
    try:
        tree = ElementTree.parse(path)
    except ElementTree.ParseError as exc:
        raise FeedParseError(f"{path}: malformed feed XML: {exc}") from exc
    root = tree.getroot()
    items = root.findall(".//item") + root.findall(".//entry")
    entries = []
    for i, item in enumerate(items):
        identifier = _entry_text(item, "path", "link", "url", "id")
        if identifier is None:
            raise FeedParseError(f"{path}: entry {i} has no path/link/url/id")
        published = _entry_text(item, "published", "pubDate", "updated")
        if published is None:
            raise FeedParseError(f"{path}: entry {i} ({identifier}) has no timestamp")
        try:
            published_at = _parse_timestamp(published)
        except (ValueError, TypeError) as exc:
            raise FeedParseError(
                f"{path}: entry {i} ({identifier}) has bad timestamp {published!r}"
            ) from exc
        entries.append(
            FeedEntry(
                path_or_url=identifier,
                company_id=_entry_text(item, "company") or "",
                doc_type=_entry_text(item, "doctype", "type") or "other",
                published_at=published_at,
                sector=_entry_text(item, "sector") or "",
            )
        )
    return entries


def _parse_feed_dir(path: Path) -> list[FeedEntry]:
    entries = []
    for file in sorted(path.glob("*.html")):
        stem = file.stem
        company = stem.split("_")[0] if "_" in stem else stem
        mtime = datetime.fromtimestamp(file.stat().st_mtime, tz=timezone.utc)
        entries.append(
            FeedEntry(
                path_or_url=str(file),
                company_id=company,
                doc_type="other",
                published_at=mtime,
            )
        )
    return entries


class FeedPoller:
    """Polls a feed source, remembering entries it has already returned.

    Seen state lives in one JSON sidecar per feed source under state_dir, so
    consecutive polls over an unchanged feed return an empty list even across
    process restarts.
    """

    def __init__(self, state_dir: str | Path) -> None:
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)

    def _state_path(self, feed_source: str) -> Path:
        digest = hashlib.sha256(str(feed_source).encode("utf-8")).hexdigest()[:16]
        return self.state_dir / f"seen_{digest}.json"

    def poll(self, feed_source: str | Path) -> list[FeedEntry]:
        source = Path(feed_source)
        if not source.exists():
            raise FeedUnavailableError(f"feed source {feed_source} does not exist")
        if source.is_dir():
            entries = _parse_feed_dir(source)
        else:
            try:
                entries = _parse_feed_xml(source)
            except OSError as exc:
                raise FeedUnavailableError(f"cannot read {feed_source}: {exc}") from exc

        state_path = self._state_path(str(feed_source))
        seen: set[str] = set()
        if state_path.exists():
            seen = set(json.loads(state_path.read_text(encoding="utf-8")))
        fresh = [e for e in entries if e.path_or_url not in seen]
        fresh.sort(key=lambda e: (e.published_at, e.path_or_url))
        seen.update(e.path_or_url for e in fresh)
        state_path.write_text(json.dumps(sorted(seen)), encoding="utf-8")
        return fresh


def poll_feed(feed_source: str | Path, state_dir: str | Path) -> list[FeedEntry]:
    """One-shot poll with persistent dedup state under state_dir."""
    return FeedPoller(state_dir).poll(feed_source)


class FilingStore:
    """One file per filing body plus an append-only manifest.

    Concurrent readers are safe; writes are serialized through one lock
    (single-writer contract).
    """

    MANIFEST = "manifest.csv"

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.bodies = self.root / "bodies"
        self.bodies.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _manifest_path(self) -> Path:
        return self.root / self.MANIFEST

    def _read_manifest(self) -> dict[str, dict]:
        index: dict[str, dict] = {}
        path = self._manifest_path()
        if not path.exists():
            return index
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            filing_id, company_id, sector, doc_type, filed_at, is_earnings = line.split(",")
            index[filing_id] = {
                "company_id": company_id,
                "sector": sector,
                "doc_type": doc_type,
                "filed_at": filed_at,
                "is_earnings": is_earnings == "true",
            }
        return index

    def store(self, doc: FilingDoc) -> str:
        with self._lock:
            index = self._read_manifest()
            if doc.filing_id in index:
                raise DuplicateFilingError(doc.filing_id)
            body_path = self.bodies / f"{doc.filing_id}.html"
            body_path.write_bytes(doc.body.encode("utf-8"))
            line = ",".join(
                [
                    doc.filing_id, doc.company_id, doc.sector, doc.doc_type,
                    doc.filed_at.astimezone(timezone.utc).isoformat(),
                    "true" if doc.is_earnings else "false",
                ]
            )
            with open(self._manifest_path(), "a", encoding="utf-8") as handle:
                handle.write(line + "\n")
        return doc.filing_id

    def load(self, filing_id: str) -> FilingDoc:
        index = self._read_manifest()
        if filing_id not in index:
            raise FilingNotFoundError(filing_id)
        meta = index[filing_id]
        body = (self.bodies / f"{filing_id}.html").read_bytes().decode("utf-8")
        return FilingDoc(
            filing_id=filing_id,
            company_id=meta["company_id"],
            sector=meta["sector"],
            doc_type=meta["doc_type"],
            filed_at=datetime.fromisoformat(meta["filed_at"]),
            body=body,
            is_earnings=meta["is_earnings"],
        )

    def list_ids(self) -> list[str]:
        return list(self._read_manifest())

    def metadata(self) -> dict[str, dict]:
        return self._read_manifest()


def ingest_feed(
    feed_source: str | Path,
    store: FilingStore,
    state_dir: str | Path,
    keywords: Sequence[str] = DEFAULT_EARNINGS_KEYWORDS,
) -> list[str]:
    """Poll a feed, classify each new document, persist it; returns new ids.

    Entry paths are resolved relative to the feed file's directory.
    """
    entries = poll_feed(feed_source, state_dir)
    base = Path(feed_source)
    base = base.parent if base.is_file() else base
    stored = []
    for entry in entries:
        path = Path(entry.path_or_url)
        if not path.is_absolute():
            path = base / path
        body = path.read_text(encoding="utf-8")
        filing_id = path.stem
        doc = FilingDoc(
            filing_id=filing_id,
            company_id=entry.company_id or filing_id,
            sector=entry.sector or SECTORS[0],
            doc_type=entry.doc_type,
            filed_at=entry.published_at,
            body=body,
        )
        doc.is_earnings = classify_earnings(doc, keywords)
        stored.append(store.store(doc))
    return stored
