"""Synthetic labeled filing corpus.

Builds a deterministic population of companies across six sectors, writes one
HTML earnings filing per (company, period) with segment tables, boilerplate
statements, and non-financial roster tables, and emits a gold label for every
row header of the financial tables.

The label signal mirrors the real-world contrast the classifier must learn:
consumer-sector operating segments are invented tokens unique to one company,
commodity-sector segments are shared terms like "natural gas", and
non-operating rows use common financial language. A few deliberately
ambiguous families ("Other" as both a reconciliation line and a segment,
standard lines carrying one rare program name) keep bag-of-words shortcuts
from solving the corpus exactly.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

from ..header_classifier.text import NON_OPERATING, OPERATING, LabeledHeader
from ..ingestion import COMMODITY_SECTORS, SECTORS, FilingDoc, classify_earnings

MONTH_NAMES = [
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
]

STANDARD_LINES = (
    "Total revenue", "Cost of sales", "Gross margin", "R&D Expense",
    "Selling, general and administrative", "Total operating expenses",
    "Operating income", "Interest expense, net", "Other income (expense), net",
    "Provision for income taxes", "Net income", "Earnings per share",
    "Depreciation and amortization", "Restructuring charges",
    "Income before taxes", "Cost of services", "Cost of products sold",
    "Gross profit", "General and administrative", "Sales and marketing",
    "Amortization of intangibles", "Stock-based compensation",
    "Interest income", "Foreign currency losses", "Deferred revenue",
    "Accrued liabilities",
)

RARE_LINE_TEMPLATES = (
    "Gain on sale of {r}",
    "Impairment of {r}",
    "Loss on {r} disposition",
    "{r} restructuring charges",
    "Amortization of {r} intangibles",
)

COMMODITY_POOLS = {
    "OilGas": (
        "natural gas", "crude oil", "refined products", "upstream",
        "downstream", "midstream", "lng trading", "exploration",
    ),
    "MetalsMining": (
        "copper", "gold", "zinc", "aluminum", "iron ore", "nickel",
        "coal", "silver",
    ),
    "Chemicals": (
        "performance materials", "agricultural solutions",
        "industrial intermediates", "coatings", "polymers",
        "specialty additives", "crop protection", "electronic materials",
    ),
}

TITLES = ("Director", "Chief Executive Officer", "Chief Financial Officer",
          "Independent Director", "Chairman", "Controller")
CITIES = ("New York", "Houston", "Chicago", "Denver", "Atlanta", "Seattle",
          "Boston", "Phoenix")

_SYLLABLES = (
    "ba be bi bo bu da de di do du fa fe fi fo ga ge gi go ka ke ki ko "
    "la le li lo ma me mi mo na ne ni no pa pe pi po ra re ri ro sa se "
    "si so ta te ti to va ve vi vo za ze zi zo"
).split()

DEFAULT_COMPANIES_PER_SECTOR = {
    "Tech": 25, "Media": 25, "Retail": 25,
    "OilGas": 25, "MetalsMining": 25, "Chemicals": 24,
}


@dataclass
class CorpusSpec:
    companies_per_sector: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_COMPANIES_PER_SECTOR)
    )
    filings_per_company: int = 2
    tables_per_filing: int = 3  # financial tables; a roster table is added on top
    seed: int = 1
    base_year: int = 2020
    standard_lines: tuple[str, ...] = STANDARD_LINES
    other_segment_rate: float = 0.4
    rare_line_rate: float = 0.35
    metric_suffix_rate: float = 0.3
    # Bag-identical, order-distinct families: "{Segment} deferred revenue"
    # (operating) vs "Deferred revenue, {Program}" (non-operating) both mask
    # to the multiset {<UNK>, deferred, revenue}.
    segment_deferred_rate: float = 0.2
    deferred_program_rate: float = 0.45


@dataclass
class GenRow:
    text: str
    indent: int
    label: Optional[str]
    values: list[str]
    path: str = ""


@dataclass
class GenTable:
    kind: str
    caption: str
    header_top: str  # merged label over the two value columns
    header_cols: tuple[str, str]
    rows: list[GenRow]


@dataclass
class Company:
    company_id: str
    sector: str
    display_name: str
    fiscal_year_end_month: int
    segments: list[str]
    has_other_segment: bool


@dataclass
class CorpusBundle:
    filings: list[FilingDoc]
    labels: list[LabeledHeader]
    calendars: dict[str, int]
    tables: list[GenTable] = field(default_factory=list, repr=False)


def _fresh_word(rng: random.Random, used: set[str], syllables: int = 3) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(syllables))
        word += rng.choice(["", "x", "n", "r"])
        if word not in used and len(word) >= 4:
            used.add(word)
            return word


def _amount(rng: random.Random, negative: bool = False, dollar: bool = False) -> str:
    value = rng.randint(100, 99_999)
    text = f"{value:,}"
    if negative:
        return f"({text})"
    return f"$ {text}" if dollar else text


def _quarter_end(fy_end_month: int, quarter: int, fiscal_year: int) -> tuple[int, int]:
    """Calendar (month, year) in which the given fiscal quarter ends."""
    month = ((fy_end_month + 3 * quarter - 13) % 12) + 1
    year = fiscal_year if month <= fy_end_month else fiscal_year - 1
    return month, year


def _assign_paths(rows: list[GenRow]) -> None:
    """Render each row's header path with the same indent-stack rule the
    table parser uses, so labels and parsed structure agree."""
    stack: list[tuple[int, str]] = []
    for row in rows:
        while stack and stack[-1][0] >= row.indent:
            stack.pop()
        row.path = " --> ".join([t for _, t in stack] + [row.text])
        stack.append((row.indent, row.text))


def _make_parent_table(
    rng: random.Random, company: Company, dates: tuple[str, str], used: set[str],
    rare_line_rate: float, deferred_program_rate: float,
) -> GenTable:
    rows = [GenRow("Net sales", 0, NON_OPERATING, [_amount(rng, dollar=True), _amount(rng)])]
    segments = list(company.segments)
    if company.has_other_segment:
        segments.append("Other")
    for seg in segments:
        rows.append(GenRow(seg.title(), 1, OPERATING, [_amount(rng), _amount(rng)]))
    rows.append(GenRow("Total net sales", 0, NON_OPERATING, [_amount(rng), _amount(rng)]))
    n_std = rng.randint(5, 7)
    for line in rng.sample(list(STANDARD_LINES), n_std):
        negative = "expense" in line.lower() or "loss" in line.lower()
        rows.append(
            GenRow(line, 0, NON_OPERATING, [_amount(rng, negative=negative), _amount(rng, negative=negative)])
        )
    if rng.random() < deferred_program_rate:
        rows.append(
            GenRow(f"Deferred revenue, {_fresh_word(rng, used).title()}", 0,
                   NON_OPERATING, [_amount(rng), _amount(rng)])
        )
    if rng.random() < rare_line_rate:
        template = rng.choice(RARE_LINE_TEMPLATES)
        rows.append(
            GenRow(template.format(r=_fresh_word(rng, used).title()), 0,
                   NON_OPERATING, [_amount(rng), _amount(rng)])
        )
    _assign_paths(rows)
    return GenTable(
        kind="parent_segments",
        caption="The following table presents net sales by segment (in millions):",
        header_top="Three Months Ended",
        header_cols=dates,
        rows=rows,
    )


def _make_flat_table(
    rng: random.Random, company: Company, quarters: tuple[str, str], used: set[str],
    metric_suffix_rate: float, segment_deferred_rate: float,
) -> GenTable:
    rows = []
    for seg in company.segments:
        text = seg.title()
        draw = rng.random()
        if draw < segment_deferred_rate:
            text = f"{text} deferred revenue"
        elif draw < segment_deferred_rate + metric_suffix_rate:
            text = f"{text} {rng.choice(['revenue', 'net sales'])}"
        rows.append(GenRow(text, 0, OPERATING, [_amount(rng), _amount(rng)]))
    rows.append(GenRow("Total revenues", 0, NON_OPERATING, [_amount(rng), _amount(rng)]))
    for line in rng.sample(list(STANDARD_LINES), rng.randint(3, 4)):
        rows.append(GenRow(line, 0, NON_OPERATING, [_amount(rng), _amount(rng)]))
    if rng.random() < 0.25:
        template = rng.choice(RARE_LINE_TEMPLATES)
        rows.append(
            GenRow(template.format(r=_fresh_word(rng, used).title()), 0,
                   NON_OPERATING, [_amount(rng), _amount(rng)])
        )
    _assign_paths(rows)
    return GenTable(
        kind="flat_segments",
        caption="Revenues by reportable segment were as follows (in millions):",
        header_top="Revenues",
        header_cols=quarters,
        rows=rows,
    )


def _make_boilerplate_table(
    rng: random.Random, dates: tuple[str, str], used: set[str],
    rare_line_rate: float, deferred_program_rate: float,
) -> GenTable:
    rows = []
    if rng.random() < 0.5:
        rows.append(GenRow("Net sales", 0, NON_OPERATING, [_amount(rng, dollar=True), _amount(rng)]))
    n_std = rng.randint(10, 13)
    for line in rng.sample(list(STANDARD_LINES), n_std):
        negative = "expense" in line.lower()
        rows.append(
            GenRow(line, 0, NON_OPERATING, [_amount(rng, negative=negative), _amount(rng, negative=negative)])
        )
    if rng.random() < 0.7:
        rows.append(GenRow("Other", 0, NON_OPERATING, [_amount(rng), _amount(rng)]))
    if rng.random() < deferred_program_rate:
        rows.append(
            GenRow(f"Deferred revenue, {_fresh_word(rng, used).title()}", 0,
                   NON_OPERATING, [_amount(rng), _amount(rng)])
        )
    if rng.random() < rare_line_rate:
        template = rng.choice(RARE_LINE_TEMPLATES)
        rows.append(
            GenRow(template.format(r=_fresh_word(rng, used).title()), 0,
                   NON_OPERATING, [_amount(rng), _amount(rng)])
        )
    rng.shuffle(rows)
    _assign_paths(rows)
    return GenTable(
        kind="boilerplate",
        caption="Condensed consolidated statements of operations "
                "(in millions, except per share amounts):",
        header_top="Three Months Ended",
        header_cols=dates,
        rows=rows,
    )


def _make_roster_table(rng: random.Random, used: set[str]) -> GenTable:
    rows = [GenRow("Name", 0, None, ["Title", "Location"])]
    for _ in range(rng.randint(3, 5)):
        name = f"{_fresh_word(rng, used, 2).title()} {_fresh_word(rng, used, 2).title()}"
        rows.append(GenRow(name, 0, None, [rng.choice(TITLES), rng.choice(CITIES)]))
    return GenTable(
        kind="roster",
        caption="Directors and executive officers of the registrant:",
        header_top="",
        header_cols=("", ""),
        rows=rows,
    )


def _render_table(table: GenTable) -> str:
    out = [f"<p>{escape(table.caption)}</p>", "<table>"]
    if table.kind == "roster":
        out.append("<tr><td>Name</td><td>Title</td><td>Location</td></tr>")
        for row in table.rows[1:]:
            cells = "".join(f"<td>{escape(v)}</td>" for v in row.values)
            out.append(f"<tr><td>{escape(row.text)}</td>{cells}</tr>")
    else:
        out.append(
            f'<tr><td></td><th colspan="2">{escape(table.header_top)}</th></tr>'
        )
        out.append(
            f"<tr><td></td><th>{escape(table.header_cols[0])}</th>"
            f"<th>{escape(table.header_cols[1])}</th></tr>"
        )
        for row in table.rows:
            pad = "&nbsp;" * (2 * row.indent)
            cells = "".join(f"<td>{escape(v)}</td>" for v in row.values)
            out.append(f"<tr><td>{pad}{escape(row.text)}</td>{cells}</tr>")
    out.append("</table>")
    return "\n".join(out)


def _build_companies(spec: CorpusSpec, rng: random.Random, used: set[str]) -> list[Company]:
    companies = []
    for sector in SECTORS:
        count = spec.companies_per_sector.get(sector, 0)
        for i in range(1, count + 1):
            company_id = f"{sector.lower()}{i:03d}"
            display = f"{_fresh_word(rng, used).title()} {rng.choice(['Corp', 'Inc', 'Group', 'Holdings', 'Industries'])}"
            fy_end = rng.choice([12, 12, 12, 12, 9, 6, 3])
            n_seg = rng.randint(2, 4)
            if sector in COMMODITY_SECTORS:
                segments = rng.sample(list(COMMODITY_POOLS[sector]), n_seg)
            else:
                segments = []
                for _ in range(n_seg):
                    word = _fresh_word(rng, used)
                    if rng.random() < 0.25:
                        word = f"{word} {_fresh_word(rng, used)}"
                    segments.append(word)
            companies.append(
                Company(
                    company_id=company_id,
                    sector=sector,
                    display_name=display,
                    fiscal_year_end_month=fy_end,
                    segments=segments,
                    has_other_segment=rng.random() < spec.other_segment_rate,
                )
            )
    return companies


def generate_corpus(spec: Optional[CorpusSpec] = None) -> CorpusBundle:
    """Generate the full corpus; byte-identical output for identical specs."""
    spec = spec or CorpusSpec()
    rng = random.Random(spec.seed)
    used: set[str] = set()
    companies = _build_companies(spec, rng, used)

    filings: list[FilingDoc] = []
    labels: list[LabeledHeader] = []
    all_tables: list[GenTable] = []
    calendars = {c.company_id: c.fiscal_year_end_month for c in companies}
    feed_base = datetime(spec.base_year, 8, 1, 12, 0, tzinfo=timezone.utc)
    filing_counter = 0

    table_kinds = ["parent_segments", "flat_segments", "boilerplate"]
    for company in companies:
        for k in range(1, spec.filings_per_company + 1):
            quarter = rng.randint(1, 4)
            fy = spec.base_year if rng.random() < 0.7 else spec.base_year - 1
            month, cal_year = _quarter_end(company.fiscal_year_end_month, quarter, fy)
            day = rng.randint(25, 28)
            date_now = f"{MONTH_NAMES[month - 1]} {day}, {cal_year}"
            date_prior = f"{MONTH_NAMES[month - 1]} {day}, {cal_year - 1}"
            dates = (date_now, date_prior)
            quarters = (f"Q{quarter} {fy}", f"Q{quarter} {fy - 1}")

            tables: list[GenTable] = []
            for t_index in range(spec.tables_per_filing):
                kind = table_kinds[t_index % len(table_kinds)]
                if kind == "parent_segments":
                    tables.append(
                        _make_parent_table(
                            rng, company, dates, used,
                            spec.rare_line_rate, spec.deferred_program_rate,
                        )
                    )
                elif kind == "flat_segments":
                    tables.append(
                        _make_flat_table(
                            rng, company, quarters, used,
                            spec.metric_suffix_rate, spec.segment_deferred_rate,
                        )
                    )
                else:
                    tables.append(
                        _make_boilerplate_table(
                            rng, dates, used,
                            spec.rare_line_rate, spec.deferred_program_rate,
                        )
                    )
            tables.append(_make_roster_table(rng, used))

            filing_id = f"{company.company_id}-f{k}"
            parts = [
                "<html><body>",
                f"<p>{escape(company.display_name)} ({company.company_id}) announced its "
                f"quarterly results for the period ended {escape(date_now)}.</p>",
                "<p>All figures are unaudited.</p>",
            ]
            for table in tables:
                parts.append(_render_table(table))
            parts.append("</body></html>")

            filed_at = feed_base + timedelta(minutes=7 * filing_counter)
            filing_counter += 1
            doc = FilingDoc(
                filing_id=filing_id,
                company_id=company.company_id,
                sector=company.sector,
                doc_type="8-K",
                filed_at=filed_at,
                body="\n".join(parts),
            )
            doc.is_earnings = classify_earnings(doc)
            filings.append(doc)
            all_tables.extend(tables)

            for t_index, table in enumerate(tables):
                if table.kind == "roster":
                    continue
                for r_index, row in enumerate(table.rows):
                    labels.append(
                        LabeledHeader(
                            text=row.path,
                            label=row.label,
                            company_id=company.company_id,
                            sector=company.sector,
                            filing_id=filing_id,
                            table_id=f"t{t_index}",
                            row_index=2 + r_index,  # two column-header rows above
                        )
                    )
    return CorpusBundle(filings=filings, labels=labels, calendars=calendars, tables=all_tables)


def save_corpus(bundle: CorpusBundle, out_dir: str | Path) -> None:
    """Write filings/, labels.csv, calendars.csv, and feed.xml under out_dir."""
    out = Path(out_dir)
    (out / "filings").mkdir(parents=True, exist_ok=True)
    for filing in bundle.filings:
        (out / "filings" / f"{filing.filing_id}.html").write_bytes(
            filing.body.encode("utf-8")
        )
    save_labels(bundle.labels, out / "labels.csv")
    (out / "calendars.csv").write_text(
        "".join(f"{cid},{month}\n" for cid, month in sorted(bundle.calendars.items())),
        encoding="utf-8",
    )
    entries = []
    for filing in bundle.filings:
        entries.append(
            "  <entry>\n"
            f"    <path>filings/{filing.filing_id}.html</path>\n"
            f"    <company>{filing.company_id}</company>\n"
            f"    <sector>{filing.sector}</sector>\n"
            f"    <doctype>{filing.doc_type}</doctype>\n"
            f"    <published>{filing.filed_at.isoformat()}</published>\n"
            "  </entry>"
        )
    (out / "feed.xml").write_text(
        "<feed>\n" + "\n".join(entries) + "\n</feed>\n", encoding="utf-8"
    )


def save_labels(labels: list[LabeledHeader], path: str | Path) -> None:
    """Write headers in the labels.csv format."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for label in labels:
        writer.writerow(
            [label.filing_id, label.table_id, label.row_index, label.text,
             label.label, label.company_id, label.sector]
        )
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def load_labels(path: str | Path) -> list[LabeledHeader]:
    """Read a labels.csv written by save_corpus."""
    labels = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            filing_id, table_id, row_index, text, label, company_id, sector = row
            labels.append(
                LabeledHeader(
                    text=text, label=label, company_id=company_id, sector=sector,
                    filing_id=filing_id, table_id=table_id, row_index=int(row_index),
                )
            )
    return labels
