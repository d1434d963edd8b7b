"""Synthetic corpus generation, company-disjoint splits, and metrics."""

from .corpus import (
    CorpusBundle,
    CorpusSpec,
    generate_corpus,
    load_labels,
    save_corpus,
)
from .metrics import (
    Metrics,
    compute_metrics,
    format_metrics,
    sector_report,
    split_by_company,
)

__all__ = [
    "CorpusBundle", "CorpusSpec", "generate_corpus", "load_labels",
    "save_corpus", "Metrics", "compute_metrics", "format_metrics",
    "sector_report", "split_by_company",
]
