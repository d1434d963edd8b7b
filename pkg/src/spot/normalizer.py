"""Normalization of periods, amounts, and bare numbers found in filing tables.

Periods are mapped onto a company's fiscal calendar ("Three Months Ended
March 30, 2020" -> "Q1 2020" for a December year-end). Amounts are scaled by
the table's stated scale and rendered with full precision and a currency tag
("$USD 14MM" -> "14,000,000.00 (USD)"). Everything else numeric is reduced to
a canonical raw form ("30 percent" -> "30%").

Money handling is exact-decimal throughout; no binary floats touch amounts.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

SCALE_FACTORS = {
    "thousands": 1_000,
    "millions": 1_000_000,
    "billions": 1_000_000_000,
}

# Inline suffixes on a single figure override the table-level scale.
SUFFIX_FACTORS = {"K": 1_000, "M": 1_000_000, "MM": 1_000_000, "B": 1_000_000_000}

CURRENCY_SYMBOLS = {"$": "USD", "€": "EUR", "£": "GBP"}
CURRENCY_CODES = ("USD", "EUR", "GBP")

_MONTHS = {
    name: i + 1
    for i, name in enumerate(
        [
            "january", "february", "march", "april", "may", "june",
            "july", "august", "september", "october", "november", "december",
        ]
    )
}
# Three-letter abbreviations resolve to the same month numbers.
_MONTHS.update({name[:3]: num for name, num in list(_MONTHS.items())})

_MONTH_ALT = "|".join(sorted(_MONTHS, key=len, reverse=True))

_SPAN_RE = re.compile(
    rf"\b(three|six|nine|twelve)\s+months?\s+ended\s+({_MONTH_ALT})\w*\.?\s+(\d{{1,2}}),?\s+(\d{{4}})\b",
    re.IGNORECASE,
)
_QTR_RE = re.compile(r"\bQ([1-4])\s*,?\s*(\d{4})\b", re.IGNORECASE)
_FY_RE = re.compile(r"\bFY\s*(\d{4})\b", re.IGNORECASE)
_DATE_RE = re.compile(
    rf"\b({_MONTH_ALT})\w*\.?\s+(\d{{1,2}}),?\s+(\d{{4}})\b", re.IGNORECASE
)

# Digits with optional comma grouping and decimal part.
_NUMBER_CORE = r"(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?"
_AMOUNT_BODY_RE = re.compile(
    rf"^({_NUMBER_CORE})\s*(K|MM|M|B)?$", re.IGNORECASE
)
_PERCENT_RE = re.compile(rf"^\s*\(?({_NUMBER_CORE})\)?\s*(?:%|percent)\s*$", re.IGNORECASE)
_RAW_NUMBER_RE = re.compile(rf"^\s*-?{_NUMBER_CORE}\s*$")
_COMMA_DECIMAL_RE = re.compile(r"^\s*-?(\d+),(\d+)\s*$")

_SCALE_PHRASE_RE = re.compile(
    r"(?:[$€£]|usd|eur|gbp)?\s*\(?\s*in\s+(thousands|millions|billions)\b", re.IGNORECASE
)
_SCALE_TOKEN_RE = re.compile(r"(?<![\w.])(MM|K)(?![\w])")
_CURRENCY_CODE_RE = re.compile(r"\b(USD|EUR|GBP)\b", re.IGNORECASE)


@dataclass
class FiscalCalendar:
    """A company's accounting year, identified by its ending month (1-12)."""

    company_id: str
    fiscal_year_end_month: int = 12

    def __post_init__(self) -> None:
        if not 1 <= self.fiscal_year_end_month <= 12:
            raise ValueError(
                f"fiscal_year_end_month out of range: {self.fiscal_year_end_month}"
            )


@dataclass
class NormalizedValue:
    """One normalized cell value; exactly one variant is populated besides raw.

    kind is one of "period", "amount", "percent", "raw_number", "text".
    """

    kind: str
    raw: str
    period: Optional[tuple[str, int]] = None  # (label, fiscal year)
    amount: Optional[tuple[Decimal, str, int]] = None  # (value, currency, scale)
    percent: Optional[Decimal] = None
    number: Optional[Decimal] = None

    def render(self) -> str:
        if self.kind == "period":
            label, year = self.period
            return f"{label} {year}"
        if self.kind == "amount":
            value, currency, _ = self.amount
            return f"{value:,.2f} ({currency})"
        if self.kind == "percent":
            return f"{_canonical_decimal(self.percent)}%"
        if self.kind == "raw_number":
            return _canonical_decimal(self.number)
        return self.raw

    @classmethod
    def text(cls, raw: str) -> "NormalizedValue":
        return cls(kind="text", raw=raw)


def _canonical_decimal(d: Decimal) -> str:
    d = d.normalize()
    if d.as_tuple().exponent > 0:
        d = d.quantize(Decimal(1))
    return format(d, "f")


def load_fiscal_calendars(path: str | Path) -> dict[str, FiscalCalendar]:
    """Read per-company calendars, one "company_id,fiscal_year_end_month" per line."""
    calendars: dict[str, FiscalCalendar] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        company_id, month = line.split(",")
        calendars[company_id.strip()] = FiscalCalendar(company_id.strip(), int(month))
    return calendars


def _months_into_fiscal_year(month: int, fy_end_month: int) -> int:
    """1-based count of months from the fiscal year start through `month`."""
    return ((month - fy_end_month - 1) % 12) + 1


def _fiscal_year_of(month: int, year: int, fy_end_month: int) -> int:
    # Fiscal years are labeled by the calendar year in which they end.
    return year if month <= fy_end_month else year + 1


def normalize_period(text: str, cal: FiscalCalendar) -> Optional[NormalizedValue]:
    """Map a period expression onto the fiscal calendar, or None if not a period.

    Recognizes "{Three|Six|Nine|Twelve} Months Ended <date>", bare
    "<Month> <day>, <year>" (treated as a three-month span end), and literal
    "Q<n> <year>" / "FY<year>" forms. Never raises on arbitrary text.
    """
    m = _SPAN_RE.search(text)
    if m:
        span, month_name, _day, year = m.groups()
        month = _MONTHS[month_name.lower()[:3]]
        fy = _fiscal_year_of(month, int(year), cal.fiscal_year_end_month)
        into = _months_into_fiscal_year(month, cal.fiscal_year_end_month)
        span = span.lower()
        if span == "three":
            label = f"Q{(into + 2) // 3}"
        elif span == "six":
            label = "H1" if into <= 6 else "H2"
        elif span == "nine":
            label = "9M"
        else:
            label = "FY"
        return NormalizedValue(kind="period", raw=text, period=(label, fy))

    m = _QTR_RE.search(text)
    if m:
        return NormalizedValue(
            kind="period", raw=text, period=(f"Q{m.group(1)}", int(m.group(2)))
        )
    m = _FY_RE.search(text)
    if m:
        return NormalizedValue(kind="period", raw=text, period=("FY", int(m.group(1))))

    m = _DATE_RE.search(text)
    if m:
        month_name, _day, year = m.groups()
        month = _MONTHS[month_name.lower()[:3]]
        fy = _fiscal_year_of(month, int(year), cal.fiscal_year_end_month)
        into = _months_into_fiscal_year(month, cal.fiscal_year_end_month)
        return NormalizedValue(
            kind="period", raw=text, period=(f"Q{(into + 2) // 3}", fy)
        )
    return None


def detect_scale(
    caption_context: Sequence[str], cell_texts: Sequence[str]
) -> tuple[int, str]:
    """Find the (scale, currency) stated in or around a table; default (1, USD).

    Caption context is scanned first, then in-table text. When both state a
    scale and they disagree, the table-internal one wins and both are logged.
    """
    caption_scale = _find_scale(caption_context)
    table_scale = _find_scale(cell_texts)
    if caption_scale and table_scale and caption_scale != table_scale:
        logger.warning(
            "conflicting scales: caption says %s, table says %s; using table",
            caption_scale, table_scale,
        )
        scale = table_scale
    else:
        scale = caption_scale or table_scale or 1

    caption_cur = _find_currency(caption_context)
    table_cur = _find_currency(cell_texts)
    if caption_cur and table_cur and caption_cur != table_cur:
        logger.warning(
            "conflicting currencies: caption says %s, table says %s; using table",
            caption_cur, table_cur,
        )
        currency = table_cur
    else:
        currency = caption_cur or table_cur or "USD"
    return scale, currency


def _find_scale(texts: Sequence[str]) -> Optional[int]:
    for text in texts:
        m = _SCALE_PHRASE_RE.search(text)
        if m:
            return SCALE_FACTORS[m.group(1).lower()]
        m = _SCALE_TOKEN_RE.search(text)
        if m:
            return SUFFIX_FACTORS[m.group(1)]
    return None


def _find_currency(texts: Sequence[str]) -> Optional[str]:
    for text in texts:
        for symbol, code in CURRENCY_SYMBOLS.items():
            if symbol in text:
                return code
        m = _CURRENCY_CODE_RE.search(text)
        if m:
            return m.group(1).upper()
    return None


def normalize_amount(
    text: str, scale: int = 1, currency: str = "USD"
) -> Optional[NormalizedValue]:
    """Parse a monetary figure, applying scale and currency; None if not one.

    Parentheses negate; an inline K/M/MM/B suffix overrides the table scale;
    an inline currency symbol or code overrides the table currency. A trailing
    "(CUR)" tag, as produced by render(), is accepted so rendered amounts
    re-parse to the identical decimal value.
    """
    s = text.strip()
    if not s:
        return None

    m = re.search(r"\(([A-Z]{3})\)\s*$", s)
    if m and m.group(1) in CURRENCY_CODES:
        currency = m.group(1)
        s = s[: m.start()].strip()

    for symbol, code in CURRENCY_SYMBOLS.items():
        if symbol in s:
            currency = code
            s = s.replace(symbol, " ")
    for code in CURRENCY_CODES:
        pattern = re.compile(rf"\b{code}\b", re.IGNORECASE)
        if pattern.search(s):
            currency = code
            s = pattern.sub(" ", s)

    s = s.strip()
    negative = False
    if s.startswith("(") and s.endswith(")"):
        negative = True
        s = s[1:-1].strip()
    elif s.startswith("-"):
        negative = True
        s = s[1:].strip()

    m = _AMOUNT_BODY_RE.match(s)
    if not m:
        return None
    digits, suffix = m.groups()
    effective_scale = SUFFIX_FACTORS[suffix.upper()] if suffix else scale
    value = Decimal(digits.replace(",", "")) * effective_scale
    if negative:
        value = -value
    return NormalizedValue(
        kind="amount", raw=text, amount=(value, currency, effective_scale)
    )


def matches_numeric_lexicon(text: str) -> bool:
    """True when the text reads as an amount, percent, or bare number."""
    t = text.strip()
    if not t:
        return False
    if normalize_amount(t) is not None:
        return True
    return normalize_number(t).kind in ("percent", "raw_number")


def normalize_number(text: str, comma_decimal: bool = False) -> NormalizedValue:
    """Reduce a non-amount, non-period number to percent or raw_number form.

    "<x>%" and "<x> percent" become the percent variant. "1,5" is accepted as
    1.5 only when comma_decimal is set; otherwise ambiguous comma usage is
    rejected back to plain text rather than misread as grouping.
    """
    m = _PERCENT_RE.match(text)
    if m:
        return NormalizedValue(
            kind="percent", raw=text, percent=Decimal(m.group(1).replace(",", ""))
        )
    if _RAW_NUMBER_RE.match(text):
        return NormalizedValue(
            kind="raw_number", raw=text, number=Decimal(text.strip().replace(",", ""))
        )
    m = _COMMA_DECIMAL_RE.match(text)
    if m:
        if comma_decimal:
            whole, frac = m.groups()
            sign = "-" if text.strip().startswith("-") else ""
            return NormalizedValue(
                kind="raw_number", raw=text, number=Decimal(f"{sign}{whole}.{frac}")
            )
        return NormalizedValue.text(text)
    return NormalizedValue.text(text)
