"""HTML table structure recognition.

Parses filing HTML into rectangular cell grids (rowspans and colspans
expanded), locates the numeric body rectangle of each table, splits the
remaining cells into row/column header chains, and infers the header
hierarchy from indentation. All functions here are pure: the same input
bytes always produce the same grids, rectangles, and paths.

Layout cues come from static markup analysis: leading spaces and non-breaking
spaces (two per indent level) and inline ``padding-left`` styles of at least
10px (one level per styled element). No browser rendering is involved.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional

from .normalizer import matches_numeric_lexicon

logger = logging.getLogger(__name__)

DEFAULT_DENSITY_THRESHOLD = 0.6

PAD_STEP_PX = 10

_PADDING_LEFT_RE = re.compile(r"padding-left\s*:\s*(\d+(?:\.\d+)?)\s*px", re.IGNORECASE)
_BLOCK_TAGS = {"p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "li", "section", "article"}


class NoBodyError(Exception):
    """Raised when a table contains no numeric cell at all."""


@dataclass
class Cell:
    """One logical table cell; merged cells keep their top-left coordinates."""

    text: str
    row: int
    col: int
    rowspan: int = 1
    colspan: int = 1
    indent_level: int = 0
    is_numeric: bool = False


@dataclass
class Grid:
    """A parsed table: a rectangular, span-expanded matrix of cells."""

    table_id: str
    cells: list[list[Cell]]
    n_rows: int
    n_cols: int
    caption_context: list[str] = field(default_factory=list)

    def cell(self, row: int, col: int) -> Cell:
        return self.cells[row][col]

    def row_texts(self, row: int) -> list[str]:
        return [c.text for c in self.cells[row]]


@dataclass(frozen=True)
class BodyRect:
    """Inclusive bounds of a table's numeric body."""

    top: int
    left: int
    bottom: int
    right: int

    @property
    def area(self) -> int:
        return (self.bottom - self.top + 1) * (self.right - self.left + 1)


@dataclass
class HeaderPath:
    """Root-first hierarchical header identity, rendered with " --> "."""

    segments: list[str]

    SEPARATOR = " --> "

    def __post_init__(self) -> None:
        if any(not s for s in self.segments):
            raise ValueError("header path segments must be non-empty")

    def render(self) -> str:
        return self.SEPARATOR.join(self.segments)

    @classmethod
    def from_rendered(cls, rendered: str) -> "HeaderPath":
        return cls(rendered.split(cls.SEPARATOR))


class _RawCell:
    __slots__ = ("parts", "rowspan", "colspan", "pad_steps")

    def __init__(self, rowspan: int, colspan: int, pad_steps: int) -> None:
        self.parts: list[str] = []
        self.rowspan = max(1, rowspan)
        self.colspan = max(1, colspan)
        self.pad_steps = pad_steps


class _RawTable:
    __slots__ = ("index", "rows", "caption_context", "open_cell")

    def __init__(self, index: int, caption_context: list[str]) -> None:
        self.index = index
        self.rows: list[list[_RawCell]] = []
        self.caption_context = caption_context
        self.open_cell: Optional[_RawCell] = None


def _int_attr(attrs: dict[str, Optional[str]], name: str) -> int:
    raw = attrs.get(name)
    if raw is None:
        return 1
    try:
        return max(1, int(raw.strip()))
    except ValueError:
        return 1


def _pad_steps(attrs: dict[str, Optional[str]]) -> int:
    style = attrs.get("style") or ""
    m = _PADDING_LEFT_RE.search(style)
    if m and float(m.group(1)) >= PAD_STEP_PX:
        return 1
    return 0


class _TableHTMLParser(HTMLParser):
    """Tolerant table extractor; malformed markup degrades, never raises."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.tables: list[_RawTable] = []
        self._stack: list[_RawTable] = []
        self._blocks: list[str] = []
        self._block_parts: list[str] = []
        self._counter = 0

    # -- text blocks outside tables, used as caption context ---------------

    def _flush_block(self) -> None:
        text = _normalize_ws("".join(self._block_parts))
        self._block_parts = []
        if text:
            self._blocks.append(text)

    # -- tag handling -------------------------------------------------------

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        attr_map = dict(attrs)
        if tag == "table":
            self._flush_block()
            table = _RawTable(self._counter, self._blocks[-2:])
            self._counter += 1
            self._stack.append(table)
            self.tables.append(table)
            return
        if not self._stack:
            if tag in _BLOCK_TAGS:
                self._flush_block()
            elif tag == "br":
                self._block_parts.append(" ")
            return

        table = self._stack[-1]
        if tag == "tr":
            table.open_cell = None
            table.rows.append([])
        elif tag in ("td", "th"):
            if not table.rows:
                table.rows.append([])
            cell = _RawCell(
                _int_attr(attr_map, "rowspan"),
                _int_attr(attr_map, "colspan"),
                _pad_steps(attr_map),
            )
            table.rows[-1].append(cell)
            table.open_cell = cell
        elif table.open_cell is not None:
            if tag == "br":
                table.open_cell.parts.append(" ")
            else:
                table.open_cell.pad_steps += _pad_steps(attr_map)

    def handle_endtag(self, tag: str) -> None:
        if tag == "table":
            if self._stack:
                table = self._stack.pop()
                table.open_cell = None
            return
        if not self._stack:
            if tag in _BLOCK_TAGS:
                self._flush_block()
            return
        if tag in ("td", "th", "tr"):
            self._stack[-1].open_cell = None

    def handle_data(self, data: str) -> None:
        if self._stack:
            cell = self._stack[-1].open_cell
            if cell is not None:
                cell.parts.append(data)
        else:
            self._block_parts.append(data)


def _normalize_ws(text: str) -> str:
    return re.sub(r"[\s\xa0]+", " ", text).strip()


def _leading_ws_count(raw: str) -> int:
    # Only whitespace after the last leading newline carries indent meaning;
    # anything before it is markup pretty-printing.
    m = re.match(r"[\s\xa0]*", raw)
    prefix = m.group(0)
    if "\n" in prefix:
        prefix = prefix.rsplit("\n", 1)[1]
    return sum(1 for ch in prefix if ch in (" ", "\xa0"))


def _build_grid(raw: _RawTable, table_id: str) -> Optional[Grid]:
    occupied: dict[tuple[int, int], Cell] = {}
    for r, row in enumerate(raw.rows):
        c = 0
        for raw_cell in row:
            while (r, c) in occupied:
                c += 1
            joined = "".join(raw_cell.parts)
            text = _normalize_ws(joined)
            indent = _leading_ws_count(joined) // 2 + raw_cell.pad_steps
            cell = Cell(
                text=text,
                row=r,
                col=c,
                rowspan=raw_cell.rowspan,
                colspan=raw_cell.colspan,
                indent_level=indent,
                is_numeric=matches_numeric_lexicon(text),
            )
            for dr in range(raw_cell.rowspan):
                for dc in range(raw_cell.colspan):
                    occupied.setdefault((r + dr, c + dc), cell)
            c += raw_cell.colspan
    if not occupied:
        return None
    n_rows = max(r for r, _ in occupied) + 1
    n_cols = max(c for _, c in occupied) + 1
    matrix = [
        [occupied.get((r, c)) or Cell(text="", row=r, col=c) for c in range(n_cols)]
        for r in range(n_rows)
    ]
    return Grid(
        table_id=table_id,
        cells=matrix,
        n_rows=n_rows,
        n_cols=n_cols,
        caption_context=list(raw.caption_context),
    )


def parse_html_tables(body: str, warnings: Optional[list[str]] = None) -> list[Grid]:
    """Parse every <table> in the document into a Grid, in document order.

    Tables that yield no cells are skipped with a warning. Zero tables is an
    empty list, not an error.
    """
    parser = _TableHTMLParser()
    parser.feed(body)
    parser.close()
    grids = []
    for raw in sorted(parser.tables, key=lambda t: t.index):
        table_id = f"t{raw.index}"
        grid = _build_grid(raw, table_id)
        if grid is None:
            message = f"table {table_id}: no parseable cells, skipped"
            logger.warning(message)
            if warnings is not None:
                warnings.append(message)
            continue
        grids.append(grid)
    return grids


def detect_body_rect(
    grid: Grid, density_threshold: float = DEFAULT_DENSITY_THRESHOLD
) -> BodyRect:
    """Locate the largest numeric body rectangle of a table.

    The returned rectangle maximizes area subject to: at least
    `density_threshold` of its cells numeric or empty, and at least one
    numeric cell in every included row and every included column. Ties break
    toward the smaller top index, then the smaller left index.
    """
    R, C = grid.n_rows, grid.n_cols
    numeric = [[1 if grid.cells[r][c].is_numeric else 0 for c in range(C)] for r in range(R)]
    ok = [
        [1 if (numeric[r][c] or not grid.cells[r][c].text) else 0 for c in range(C)]
        for r in range(R)
    ]
    if not any(any(row) for row in numeric):
        raise NoBodyError(f"table {grid.table_id}: no numeric cell")

    # Row-wise prefix sums: count within one row over a column range in O(1).
    num_row_pref = [[0] * (C + 1) for _ in range(R)]
    ok_row_pref = [[0] * (C + 1) for _ in range(R)]
    for r in range(R):
        for c in range(C):
            num_row_pref[r][c + 1] = num_row_pref[r][c] + numeric[r][c]
            ok_row_pref[r][c + 1] = ok_row_pref[r][c] + ok[r][c]

    best: Optional[BodyRect] = None
    for top in range(R):
        col_counts = [0] * C  # numeric count per column over rows top..bottom
        for bottom in range(top, R):
            for c in range(C):
                col_counts[c] += numeric[bottom][c]
            height = bottom - top + 1
            left = 0
            while left < C:
                if col_counts[left] == 0:
                    left += 1
                    continue
                # Contiguous run of columns that each contain a numeric cell.
                run_end = left
                while run_end + 1 < C and col_counts[run_end + 1] > 0:
                    run_end += 1
                for lo in range(left, run_end + 1):
                    for hi in range(lo, run_end + 1):
                        width = hi - lo + 1
                        area = height * width
                        if best is not None and area < best.area:
                            continue
                        ok_count = 0
                        rows_ok = True
                        for r in range(top, bottom + 1):
                            if num_row_pref[r][hi + 1] - num_row_pref[r][lo] == 0:
                                rows_ok = False
                                break
                            ok_count += ok_row_pref[r][hi + 1] - ok_row_pref[r][lo]
                        if not rows_ok or ok_count < density_threshold * area:
                            continue
                        cand = BodyRect(top, lo, bottom, hi)
                        if (
                            best is None
                            or area > best.area
                            or (area == best.area and (cand.top, cand.left) < (best.top, best.left))
                        ):
                            best = cand
                left = run_end + 1
    assert best is not None  # at least one numeric 1x1 rectangle qualifies
    return best


def extract_headers(
    grid: Grid, body: BodyRect
) -> tuple[list[list[Cell]], list[list[Cell]]]:
    """Split cells outside the body into per-row and per-column header chains.

    Row chains run left of the body, one per body row; column chains run above
    the body, one per body column, with span-expanded duplicates collapsed.
    Empty-text cells are dropped from chains.
    """
    row_headers = []
    for r in range(body.top, body.bottom + 1):
        chain = []
        for c in range(body.left):
            cell = grid.cells[r][c]
            if cell.text and (not chain or chain[-1] is not cell):
                chain.append(cell)
        row_headers.append(chain)
    col_headers = []
    for c in range(body.left, body.right + 1):
        chain = []
        for r in range(body.top):
            cell = grid.cells[r][c]
            if cell.text and (not chain or chain[-1] is not cell):
                chain.append(cell)
        col_headers.append(chain)
    return row_headers, col_headers


def infer_header_hierarchy(
    row_headers: list[list[Cell]],
) -> list[Optional[HeaderPath]]:
    """Nest row headers by indentation into root-first paths.

    A header indented deeper than its nearest preceding shallower header
    becomes that header's descendant; equal indents are siblings. Empty
    chains yield None and leave the nesting stack untouched. Output is
    aligned with the input chains.
    """
    stack: list[tuple[int, str]] = []  # (indent, text), root-first
    paths: list[Optional[HeaderPath]] = []
    for chain in row_headers:
        if not chain:
            paths.append(None)
            continue
        leaf = chain[-1]
        while stack and stack[-1][0] >= leaf.indent_level:
            stack.pop()
        segments = [text for _, text in stack] + [leaf.text]
        paths.append(HeaderPath(segments))
        stack.append((leaf.indent_level, leaf.text))
    return paths


def dump_grid(grid: Grid) -> str:
    """Serialize a grid for inspection: dimensions, then one cell per line."""
    lines = [f"{grid.n_rows} {grid.n_cols}"]
    for r in range(grid.n_rows):
        for c in range(grid.n_cols):
            cell = grid.cells[r][c]
            lines.append(
                f"{r}\t{c}\t{cell.indent_level}\t{int(cell.is_numeric)}\t{cell.text}"
            )
    return "\n".join(lines) + "\n"


def parse_grid_dump(text: str, table_id: str = "t?") -> Grid:
    """Rebuild a grid from its dump_grid serialization."""
    lines = text.splitlines()
    n_rows, n_cols = (int(x) for x in lines[0].split())
    matrix = [
        [Cell(text="", row=r, col=c) for c in range(n_cols)] for r in range(n_rows)
    ]
    for line in lines[1:]:
        if not line:
            continue
        r_s, c_s, indent_s, numeric_s, text = line.split("\t", 4)
        r, c = int(r_s), int(c_s)
        matrix[r][c] = Cell(
            text=text,
            row=r,
            col=c,
            indent_level=int(indent_s),
            is_numeric=bool(int(numeric_s)),
        )
    return Grid(table_id=table_id, cells=matrix, n_rows=n_rows, n_cols=n_cols)
