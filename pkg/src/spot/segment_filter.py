"""Two-stage table filtering.

Stage one drops tables with no financial signal at all (no amounts, currency
markers, or periods). Stage two treats each company as one document, weights
every token by TF-IDF against the company corpus, and scores each table by
the best 2-row window sum of its tokens' weights for the filing company.
Tables scoring above a tuned threshold are kept as likely segment bearers;
boilerplate shared across all companies nets a weight of zero and falls out.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .normalizer import (
    CURRENCY_SYMBOLS,
    FiscalCalendar,
    normalize_amount,
    normalize_number,
    normalize_period,
)
from .table_parser import Grid, parse_html_tables

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_CURRENCY_MARK_RE = re.compile(r"[$€£]|\b(?:usd|eur|gbp)\b", re.IGNORECASE)

_DEFAULT_CAL = FiscalCalendar("", 12)


class UnknownCompanyError(KeyError):
    """A company was scored against a matrix it was never built into."""


@dataclass
class CompanyDoc:
    """All of one company's filing text merged into a bag of token counts."""

    company_id: str
    token_counts: dict[str, int]


@dataclass
class TfidfMatrix:
    """Company-specificity weights: rows are tokens, columns are companies."""

    vocabulary: list[str]
    companies: list[str]
    weights: np.ndarray  # |V| x |C|, float64
    doc_freq: dict[str, int]
    token_index: dict[str, int] = field(init=False)
    company_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.token_index = {t: i for i, t in enumerate(self.vocabulary)}
        self.company_index = {c: i for i, c in enumerate(self.companies)}

    def weight(self, token: str, company_id: str) -> float:
        if company_id not in self.company_index:
            raise UnknownCompanyError(company_id)
        ti = self.token_index.get(token)
        if ti is None:
            return 0.0
        return float(self.weights[ti, self.company_index[company_id]])


@dataclass
class TableScore:
    table_id: str
    window_scores: list[float]
    s_max: float
    threshold: float
    emitted: bool


def tokenize_words(text: str) -> list[str]:
    """Lowercased word tokens, punctuation-split, pure numbers dropped."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if not t.isdigit()]


def has_financial_content(grid: Grid) -> bool:
    """True when any cell holds an amount, a currency marker, or a period."""
    for row in grid.cells:
        for cell in row:
            if not cell.text:
                continue
            if cell.is_numeric and (
                normalize_amount(cell.text) is not None
                or normalize_number(cell.text).kind == "percent"
            ):
                return True
            if _CURRENCY_MARK_RE.search(cell.text):
                return True
            if normalize_period(cell.text, _DEFAULT_CAL) is not None:
                return True
    return False


def build_company_doc(filings: Sequence) -> CompanyDoc:
    """Merge all of a company's filings into one token-count document.

    Tokens come from every table cell plus each table's caption context.
    All filings must belong to the same company.
    """
    if not filings:
        raise ValueError("cannot build a company document from zero filings")
    company_ids = {f.company_id for f in filings}
    if len(company_ids) != 1:
        raise ValueError(f"filings span multiple companies: {sorted(company_ids)}")
    counts: dict[str, int] = {}
    for filing in filings:
        for grid in parse_html_tables(filing.body):
            texts: list[str] = list(grid.caption_context)
            for row in grid.cells:
                texts.extend(cell.text for cell in row)
            for text in texts:
                for token in tokenize_words(text):
                    counts[token] = counts.get(token, 0) + 1
    return CompanyDoc(company_id=company_ids.pop(), token_counts=counts)


def tfidf_weight(token: str, company_id: str, docs: Sequence[CompanyDoc]) -> float:
    """tf(token in company doc) * ln(|C| / df(token)); 0 for absent tokens."""
    by_id = {d.company_id: d for d in docs}
    if company_id not in by_id:
        raise UnknownCompanyError(company_id)
    tf = by_id[company_id].token_counts.get(token, 0)
    if tf == 0:
        return 0.0
    df = sum(1 for d in docs if token in d.token_counts)
    return tf * math.log(len(docs) / df)


def build_tfidf(docs: Sequence[CompanyDoc]) -> TfidfMatrix:
    """Build the full token-by-company weight matrix over the given corpus."""
    if not docs:
        raise ValueError("cannot build a TF-IDF matrix from zero companies")
    companies = [d.company_id for d in docs]
    if len(set(companies)) != len(companies):
        raise ValueError("duplicate company ids in corpus")
    vocabulary = sorted({t for d in docs for t in d.token_counts})
    doc_freq = {
        t: sum(1 for d in docs if t in d.token_counts) for t in vocabulary
    }
    n = len(docs)
    weights = np.zeros((len(vocabulary), n), dtype=np.float64)
    token_index = {t: i for i, t in enumerate(vocabulary)}
    for ci, doc in enumerate(docs):
        for token, tf in doc.token_counts.items():
            idf = math.log(n / doc_freq[token])
            weights[token_index[token], ci] = tf * idf
    return TfidfMatrix(
        vocabulary=vocabulary, companies=companies, weights=weights, doc_freq=doc_freq
    )


def score_table(
    grid: Grid, company_id: str, matrix: TfidfMatrix, delta: float
) -> TableScore:
    """Score a table by its best 2-row window of company-specific weight.

    Each window contributes the sum of weights of its distinct tokens; a
    single-row table is scored on that row alone. The table is emitted when
    the best window strictly exceeds delta.
    """
    if company_id not in matrix.company_index:
        raise UnknownCompanyError(company_id)
    ci = matrix.company_index[company_id]
    row_tokens = [
        {t for cell in row for t in tokenize_words(cell.text)} for row in grid.cells
    ]
    if len(row_tokens) == 1:
        windows = [row_tokens[0]]
    else:
        windows = [row_tokens[i] | row_tokens[i + 1] for i in range(len(row_tokens) - 1)]
    scores = []
    for window in windows:
        s = 0.0
        for token in window:
            ti = matrix.token_index.get(token)
            if ti is not None:
                s += float(matrix.weights[ti, ci])
        scores.append(s)
    s_max = max(scores)
    return TableScore(
        table_id=grid.table_id,
        window_scores=scores,
        s_max=s_max,
        threshold=delta,
        emitted=s_max > delta,
    )


def tune_threshold(
    validation: Sequence[tuple[float, bool]], target_recall: float = 0.98
) -> float:
    """Pick the largest threshold keeping recall of segment tables >= target.

    `validation` pairs each table's s_max with whether it truly bears
    segments. Emission is strict (s_max > threshold), so the result sits just
    below the lowest positive score that must still be emitted. When even a
    zero threshold cannot reach the target (zero-scoring positives), returns
    0.0 with a warning so the filter passes everything it can.
    """
    if not validation:
        raise ValueError("cannot tune a threshold on empty validation data")
    positives = sorted(s for s, has_segments in validation if has_segments)
    if not positives:
        logger.warning("no segment-bearing tables in validation; threshold 0")
        return 0.0
    n = len(positives)
    allowed_misses = n - math.ceil(target_recall * n)
    cutoff = positives[allowed_misses]
    delta = cutoff - max(abs(cutoff), 1.0) * 1e-9
    if delta < 0.0:
        logger.warning(
            "recall %.2f unreachable: %d positive tables score %.3g; threshold 0",
            target_recall, n, cutoff,
        )
        return 0.0
    return delta


def dump_matrix(matrix: TfidfMatrix) -> str:
    """Inspection dump: "token,company,weight", one nonzero entry per line."""
    lines = ["token,company,weight"]
    for ti, token in enumerate(matrix.vocabulary):
        for ci, company in enumerate(matrix.companies):
            w = matrix.weights[ti, ci]
            if w != 0.0:
                lines.append(f"{token},{company},{w!r}")
    return "\n".join(lines) + "\n"


def save_matrix(matrix: TfidfMatrix, path) -> None:
    import json
    from pathlib import Path

    entries = []
    rows, cols = np.nonzero(matrix.weights)
    for ti, ci in zip(rows.tolist(), cols.tolist()):
        entries.append([int(ti), int(ci), float(matrix.weights[ti, ci])])
    payload = {
        "vocabulary": matrix.vocabulary,
        "companies": matrix.companies,
        "doc_freq": matrix.doc_freq,
        "entries": entries,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_matrix(path) -> TfidfMatrix:
    import json
    from pathlib import Path

    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = np.zeros(
        (len(payload["vocabulary"]), len(payload["companies"])), dtype=np.float64
    )
    for ti, ci, w in payload["entries"]:
        weights[ti, ci] = w
    return TfidfMatrix(
        vocabulary=payload["vocabulary"],
        companies=payload["companies"],
        weights=weights,
        doc_freq=payload["doc_freq"],
    )
