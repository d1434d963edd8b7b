"""Evaluation metrics: positive-class P/R/F1, micro-F1, per-sector breakdown.

The non-operating class is the positive class throughout; operating segments
are the negative class. Micro-F1 pools true/false positives over both
classes, which for binary single-label data collapses to plain accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..header_classifier.text import NON_OPERATING, OPERATING, LabeledHeader
from ..ingestion import COMMODITY_SECTORS, CONSUMER_SECTORS

POSITIVE = NON_OPERATING


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    micro_f1: float
    per_sector_f1: dict[str, float] = field(default_factory=dict)


def _f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall) if precision + recall else 0.0
    )
    return precision, recall, f1


def compute_metrics(
    predictions: Sequence[str],
    gold: Sequence[str],
    sectors: Optional[Sequence[str]] = None,
) -> Metrics:
    """Score binary predictions against gold labels.

    `sectors`, when given, must align with the label sequences and yields the
    per-sector F1 mapping.
    """
    if len(predictions) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold"
        )
    if sectors is not None and len(sectors) != len(gold):
        raise ValueError("sectors must align with the label sequences")

    tp = fp = fn = tn = 0
    for pred, true in zip(predictions, gold):
        if pred == POSITIVE and true == POSITIVE:
            tp += 1
        elif pred == POSITIVE:
            fp += 1
        elif true == POSITIVE:
            fn += 1
        else:
            tn += 1
    precision, recall, f1 = _f1_from_counts(tp, fp, fn)

    # Micro-average over both classes: the negative class contributes its own
    # tp/fp/fn counts (tn/fn/fp of the positive class respectively).
    micro_tp = tp + tn
    micro_fp = fp + fn
    micro_fn = fn + fp
    micro_p, micro_r, micro_f1 = _f1_from_counts(micro_tp, micro_fp, micro_fn)

    per_sector: dict[str, float] = {}
    if sectors is not None:
        for sector in sorted(set(sectors)):
            idx = [i for i, s in enumerate(sectors) if s == sector]
            s_tp = sum(1 for i in idx if predictions[i] == POSITIVE and gold[i] == POSITIVE)
            s_fp = sum(1 for i in idx if predictions[i] == POSITIVE and gold[i] != POSITIVE)
            s_fn = sum(1 for i in idx if predictions[i] != POSITIVE and gold[i] == POSITIVE)
            per_sector[sector] = _f1_from_counts(s_tp, s_fp, s_fn)[2]

    return Metrics(
        tp=tp, fp=fp, fn=fn, tn=tn,
        precision=precision, recall=recall, f1=f1, micro_f1=micro_f1,
        per_sector_f1=per_sector,
    )


def split_by_company(
    labels: Sequence[LabeledHeader], test_fraction: float, seed: int = 0
) -> tuple[list[LabeledHeader], list[LabeledHeader]]:
    """Split headers so that no company straddles train and test.

    The fraction applies to the company count, not the header count. The
    induced partition depends only on the set of company ids and the seed,
    never on label order.
    """
    import random

    companies = sorted({h.company_id for h in labels})
    if len(companies) < 2:
        raise ValueError("need at least 2 companies to split")
    rng = random.Random(seed)
    shuffled = companies[:]
    rng.shuffle(shuffled)
    n_test = max(1, round(test_fraction * len(companies)))
    if n_test >= len(companies):
        n_test = len(companies) - 1
    test_companies = set(shuffled[:n_test])
    train = [h for h in labels if h.company_id not in test_companies]
    test = [h for h in labels if h.company_id in test_companies]
    return train, test


def format_metrics(metrics: Metrics) -> str:
    """Plain-text report plus machine-readable key=value lines."""
    lines = [
        "classification report (positive class = non_operating)",
        f"  tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn}",
        f"  precision={metrics.precision:.4f} recall={metrics.recall:.4f} "
        f"f1={metrics.f1:.4f} micro_f1={metrics.micro_f1:.4f}",
        "",
    ]
    for key, value in [
        ("tp", metrics.tp), ("fp", metrics.fp), ("fn", metrics.fn), ("tn", metrics.tn),
        ("precision", metrics.precision), ("recall", metrics.recall),
        ("f1", metrics.f1), ("micro_f1", metrics.micro_f1),
    ]:
        lines.append(f"{key}={value!r}")
    for sector, f1 in sorted(metrics.per_sector_f1.items()):
        lines.append(f"sector_f1[{sector}]={f1!r}")
    return "\n".join(lines) + "\n"


def sector_report(
    model_predictions: dict[str, Sequence[str]],
    gold: Sequence[str],
    sectors: Sequence[str],
) -> str:
    """Aligned text table of per-sector F1 with commodity/consumer aggregates.

    Sectors are columns and models are rows; group aggregates are computed
    from pooled counts, not averaged per-sector scores. Sectors with no test
    headers report "n/a".
    """
    if len(gold) != len(sectors):
        raise ValueError("gold labels and sectors must align")
    groups = [
        ("Commodities", list(COMMODITY_SECTORS)),
        ("Consumer", list(CONSUMER_SECTORS)),
    ]
    columns: list[str] = []
    for group_name, members in groups:
        columns.extend(members)
        columns.append(f"{group_name} F1")

    rows = []
    for model_name, preds in model_predictions.items():
        if len(preds) != len(gold):
            raise ValueError(f"{model_name}: prediction length mismatch")
        cells = []
        for group_name, members in groups:
            pooled = [0, 0, 0]  # tp, fp, fn over the whole group
            for sector in members:
                idx = [i for i, s in enumerate(sectors) if s == sector]
                if not idx:
                    cells.append("n/a")
                    continue
                tp = sum(1 for i in idx if preds[i] == POSITIVE and gold[i] == POSITIVE)
                fp = sum(1 for i in idx if preds[i] == POSITIVE and gold[i] != POSITIVE)
                fn = sum(1 for i in idx if preds[i] != POSITIVE and gold[i] == POSITIVE)
                pooled[0] += tp
                pooled[1] += fp
                pooled[2] += fn
                cells.append(f"{_f1_from_counts(tp, fp, fn)[2]:.3f}")
            if pooled == [0, 0, 0]:
                cells.append("n/a")
            else:
                cells.append(f"{_f1_from_counts(*pooled)[2]:.3f}")
        rows.append((model_name, cells))

    name_width = max(len("Model"), max((len(n) for n, _ in rows), default=0))
    col_widths = [
        max(len(col), max((len(cells[i]) for _, cells in rows), default=0))
        for i, col in enumerate(columns)
    ]
    header = "Model".ljust(name_width) + "  " + "  ".join(
        col.rjust(w) for col, w in zip(columns, col_widths)
    )
    out = [header]
    for name, cells in rows:
        out.append(
            name.ljust(name_width) + "  " + "  ".join(
                c.rjust(w) for c, w in zip(cells, col_widths)
            )
        )
    return "\n".join(out) + "\n"
