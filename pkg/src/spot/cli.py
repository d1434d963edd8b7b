"""Command-line entry point: the pipeline as headless subcommands.

Every run writes a manifest of its inputs (paths plus content hashes) and the
seed next to its outputs, so any artifact can be reproduced. Exit codes:
0 success, 1 validation/usage error, 2 runtime failure. The SPOT_STORE
environment variable overrides the default store path; a key=value config
file can preset any flag, with explicit flags winning.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class CliError(Exception):
    """Input validation failure; maps to exit code 1."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, inputs: Sequence[Path],
                    seed: Optional[int] = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs if Path(p).is_file()},
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _default_store() -> str:
    return os.environ.get("SPOT_STORE", "store")


def _load_config(path: Optional[str]) -> dict[str, str]:
    if not path:
        return {}
    config = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        config[key.strip().replace("-", "_")] = value.strip()
    return config


def _require(path: str, kind: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(f"{kind} path does not exist: {path}")
    return p


# --------------------------------------------------------------------------
# subcommands


def cmd_gen_corpus(args) -> int:
    from .eval_harness import CorpusSpec, generate_corpus, save_corpus

    spec = CorpusSpec(seed=args.seed, filings_per_company=args.filings_per_company,
                      tables_per_filing=args.tables_per_filing)
    if args.companies_per_sector is not None:
        from .ingestion import SECTORS

        spec.companies_per_sector = {s: args.companies_per_sector for s in SECTORS}
    bundle = generate_corpus(spec)
    out = Path(args.out)
    save_corpus(bundle, out)
    _write_manifest(out, "gen-corpus", [], seed=args.seed)
    operating = sum(1 for l in bundle.labels if l.label == "operating")
    print(
        f"wrote {len(bundle.filings)} filings, {len(bundle.labels)} labels "
        f"({operating} operating) to {out}"
    )
    return EXIT_OK


def cmd_ingest(args) -> int:
    from .ingestion import FilingStore, ingest_feed

    feed = _require(args.feed, "feed")
    store = FilingStore(args.store)
    state_dir = Path(args.state_dir) if args.state_dir else Path(args.store) / "state"
    stored = ingest_feed(feed, store, state_dir)
    _write_manifest(Path(args.store), "ingest", [feed])
    print(f"ingested {len(stored)} new filings into {args.store}")
    return EXIT_OK


def cmd_build_tfidf(args) -> int:
    from .ingestion import FilingStore
    from .segment_filter import build_company_doc, build_tfidf, dump_matrix, save_matrix

    store = FilingStore(_require(args.store, "store"))
    by_company: dict[str, list] = {}
    for filing_id in store.list_ids():
        doc = store.load(filing_id)
        by_company.setdefault(doc.company_id, []).append(doc)
    if not by_company:
        raise CliError(f"store {args.store} holds no filings")
    docs = [build_company_doc(filings) for _, filings in sorted(by_company.items())]
    matrix = build_tfidf(docs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_matrix(matrix, out)
    if args.dump:
        Path(args.dump).write_text(dump_matrix(matrix), encoding="utf-8")
    _write_manifest(out.parent, "build-tfidf", [Path(args.store) / "manifest.csv"])
    print(
        f"matrix over {len(matrix.companies)} companies, "
        f"{len(matrix.vocabulary)} tokens -> {out}"
    )
    return EXIT_OK


def cmd_tune_delta(args) -> int:
    from .eval_harness import load_labels
    from .ingestion import FilingStore
    from .segment_filter import load_matrix, score_table, tune_threshold
    from .table_parser import parse_html_tables

    store = FilingStore(_require(args.store, "store"))
    labels = load_labels(_require(args.labels, "labels"))
    matrix = load_matrix(_require(args.matrix, "matrix"))

    table_truth: dict[tuple[str, str], bool] = {}
    for label in labels:
        key = (label.filing_id, label.table_id)
        table_truth[key] = table_truth.get(key, False) or label.label == "operating"

    validation = []
    grids_by_filing: dict[str, dict] = {}
    for (filing_id, table_id), has_segments in sorted(table_truth.items()):
        if filing_id not in grids_by_filing:
            doc = store.load(filing_id)
            grids_by_filing[filing_id] = {
                (g.table_id): (g, doc.company_id)
                for g in parse_html_tables(doc.body)
            }
        grid, company_id = grids_by_filing[filing_id][table_id]
        score = score_table(grid, company_id, matrix, delta=0.0)
        validation.append((score.s_max, has_segments))
    delta = tune_threshold(validation, target_recall=args.target_recall)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(f"{delta!r}\n", encoding="utf-8")
    _write_manifest(out.parent, "tune-delta", [Path(args.labels), Path(args.matrix)])
    print(f"delta={delta!r} over {len(validation)} validation tables -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .eval_harness import load_labels, split_by_company
    from .header_classifier import (
        TrainConfig, format_history, load_embeddings, save_model, train_model,
    )

    labels = load_labels(_require(args.labels, "labels"))
    cfg = TrainConfig(
        dropout_rate=args.dropout, learning_rate=args.lr, max_epochs=args.epochs,
        patience=args.patience, batch_size=args.batch_size, seed=args.seed,
        seq_len=args.seq_len, emb_dim=args.emb_dim, hidden=args.hidden,
        min_freq=args.min_freq, threshold=args.threshold,
        freeze_embeddings=args.freeze_embeddings,
    )
    rest, test = split_by_company(labels, args.test_fraction, seed=args.seed)
    train, valid = split_by_company(rest, args.valid_fraction, seed=args.seed + 1)
    embeddings = None
    if args.embeddings:
        embeddings = load_embeddings(_require(args.embeddings, "embeddings"), dim=args.emb_dim)
    model, history = train_model(train, valid, cfg, embeddings=embeddings)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out, extra={"threshold": cfg.threshold})
    history_path = Path(args.history) if args.history else out.with_suffix(".history.csv")
    history_path.write_text(format_history(history), encoding="utf-8")
    if args.test_labels_out:
        from .eval_harness.corpus import save_labels

        save_labels(test, args.test_labels_out)
    inputs = [Path(args.labels)] + ([Path(args.embeddings)] if args.embeddings else [])
    _write_manifest(out.parent, "train", inputs, seed=args.seed)
    best = max((h.valid_f1 for h in history), default=0.0)
    print(
        f"trained on {len(train)} headers ({len(valid)} valid, {len(test)} test held out); "
        f"best valid F1 {best:.4f} -> {out}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    from .eval_harness import compute_metrics, format_metrics
    from .eval_harness.corpus import load_labels
    from .header_classifier import load_model, predict

    labels = load_labels(_require(args.labels, "labels"))
    model, extra = load_model(_require(args.model, "model"))
    threshold = float(extra.get("threshold", 0.5))
    predictions = [
        label for label, _ in predict([l.text for l in labels], model.vocab, model, threshold)
    ]
    metrics = compute_metrics(
        predictions, [l.label for l in labels], [l.sector for l in labels]
    )
    report = format_metrics(metrics)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report, encoding="utf-8")
    _write_manifest(out.parent, "eval", [Path(args.labels), Path(args.model)])
    print(report, end="")
    return EXIT_OK


def cmd_extract(args) -> int:
    from .extraction_service import RecordStore, extract_segments, save_grid_dumps
    from .header_classifier import load_model
    from .ingestion import FilingStore
    from .normalizer import FiscalCalendar, load_fiscal_calendars
    from .segment_filter import load_matrix

    store = FilingStore(_require(args.store, "store"))
    model, extra = load_model(_require(args.model, "model"))
    matrix = load_matrix(_require(args.matrix, "matrix"))
    calendars = (
        load_fiscal_calendars(_require(args.calendars, "calendars"))
        if args.calendars else {}
    )
    threshold = float(extra.get("threshold", 0.5))
    record_store = RecordStore(args.store)

    filing_ids = store.list_ids() if args.filing == "all" else [args.filing]
    total = 0
    for filing_id in filing_ids:
        doc = store.load(filing_id)
        if not doc.is_earnings:
            logger.warning("filing %s is not an earnings report; skipping", filing_id)
            record_store.save_records(filing_id, [])
            continue
        cal = calendars.get(doc.company_id, FiscalCalendar(doc.company_id, 12))
        records = extract_segments(
            doc, model, matrix, delta=args.delta, calendar=cal, threshold=threshold,
        )
        record_store.save_records(filing_id, records)
        save_grid_dumps(doc, args.store)
        total += len(records)
    _write_manifest(
        Path(args.store), "extract", [Path(args.model), Path(args.matrix)],
    )
    print(f"extracted {total} segment records from {len(filing_ids)} filing(s)")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .extraction_service import serve_api

    serve_api(_require(args.store, "store"), port=args.port, host=args.host)
    return EXIT_OK


def cmd_export(args) -> int:
    from .extraction_service import RecordStore, export_records
    from .ingestion import FilingStore

    store = FilingStore(_require(args.store, "store"))
    record_store = RecordStore(args.store)
    company_of_filing = {
        fid: meta["company_id"] for fid, meta in store.metadata().items()
    }
    csv_text = export_records(
        list(record_store.all_records()), company_of_filing,
        company=args.company, period=args.period, segment=args.segment,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(csv_text, encoding="utf-8")
    _write_manifest(out.parent, "export", [])
    print(f"wrote {max(0, len(csv_text.splitlines()) - 1)} rows to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(
        prog="spot",
        description="Operating-segment extraction pipeline.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--config", help="key=value config file presetting any flag")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    def add(name, func, **kwargs):
        p = sub.add_parser(
            name, formatter_class=argparse.ArgumentDefaultsHelpFormatter, **kwargs
        )
        p.set_defaults(func=func)
        subparsers[name] = p
        return p

    p = add("gen-corpus", cmd_gen_corpus, help="generate the synthetic labeled corpus")
    p.add_argument("--seed", type=int, default=1, help="corpus generation seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--filings-per-company", type=int, default=2, help="filings per company")
    p.add_argument("--tables-per-filing", type=int, default=3, help="financial tables per filing")
    p.add_argument("--companies-per-sector", type=int, default=None,
                   help="override the per-sector company counts uniformly")

    p = add("ingest", cmd_ingest, help="poll a feed and store new filings")
    p.add_argument("--feed", required=True, help="feed XML file or directory of .html")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--state-dir", default=None, help="poller dedup state directory")

    p = add("build-tfidf", cmd_build_tfidf, help="build the company TF-IDF matrix")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--out", required=True, help="matrix JSON output path")
    p.add_argument("--dump", default=None, help="also write the CSV inspection dump")

    p = add("tune-delta", cmd_tune_delta, help="tune the table-score threshold")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--labels", required=True, help="labels CSV from gen-corpus")
    p.add_argument("--matrix", required=True, help="TF-IDF matrix JSON")
    p.add_argument("--out", required=True, help="threshold output file")
    p.add_argument("--target-recall", type=float, default=0.98, help="segment-table recall target")

    p = add("train", cmd_train, help="train the BiGRU header classifier")
    p.add_argument("--labels", required=True, help="labels CSV from gen-corpus")
    p.add_argument("--out", required=True, help="model checkpoint output path")
    p.add_argument("--embeddings", default=None, help="pre-trained embedding file")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--epochs", type=int, default=30, help="maximum epochs")
    p.add_argument("--patience", type=int, default=7, help="early-stop patience")
    p.add_argument("--batch-size", type=int, default=64, help="minibatch size")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--dropout", type=float, default=0.2, help="dropout rate")
    p.add_argument("--hidden", type=int, default=50, help="GRU units per direction")
    p.add_argument("--emb-dim", type=int, default=300, help="embedding size")
    p.add_argument("--seq-len", type=int, default=25, help="sequence length")
    p.add_argument("--min-freq", type=int, default=2, help="vocabulary count floor")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="non-operating probability threshold")
    p.add_argument("--freeze-embeddings", action="store_true",
                   help="do not fine-tune embedding rows")
    p.add_argument("--test-fraction", type=float, default=0.2,
                   help="fraction of companies held out for testing")
    p.add_argument("--valid-fraction", type=float, default=0.15,
                   help="fraction of remaining companies used for validation")
    p.add_argument("--test-labels-out", default=None,
                   help="write the held-out test labels here")
    p.add_argument("--history", default=None, help="metrics history CSV path")

    p = add("eval", cmd_eval, help="evaluate a model on a labels file")
    p.add_argument("--labels", required=True, help="labels CSV to evaluate on")
    p.add_argument("--model", required=True, help="model checkpoint")
    p.add_argument("--out", required=True, help="metrics report path")

    p = add("extract", cmd_extract, help="extract segment records from a filing")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--filing", required=True, help='filing id, or "all"')
    p.add_argument("--model", required=True, help="model checkpoint")
    p.add_argument("--matrix", required=True, help="TF-IDF matrix JSON")
    p.add_argument("--delta", type=float, default=0.0, help="table-score threshold")
    p.add_argument("--calendars", default=None, help="fiscal calendar config file")

    p = add("serve", cmd_serve, help="serve the review HTTP API")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--port", type=int, default=8000, help="listen port")
    p.add_argument("--host", default="127.0.0.1", help="bind address")

    p = add("export", cmd_export, help="export segment records as CSV")
    p.add_argument("--store", default=_default_store())
    p.add_argument("--out", required=True)
    p.add_argument("--company", default=None, help="exact company id filter")
    p.add_argument("--period", default=None, help="exact rendered period filter")
    p.add_argument("--segment", default=None, help="segment path substring filter")

    return parser, subparsers


def _apply_config(
    subparsers: dict[str, argparse.ArgumentParser], config: dict[str, str]
) -> None:
    """Preset matching flag defaults from a config file; flags still win."""
    for sp in subparsers.values():
        overrides = {}
        for action in sp._actions:  # argparse keeps this list stable
            if action.dest not in config:
                continue
            raw = config[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                overrides[action.dest] = raw.lower() in ("1", "true", "yes")
            elif action.type is not None:
                overrides[action.dest] = action.type(raw)
            else:
                overrides[action.dest] = raw
        if overrides:
            sp.set_defaults(**overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser, subparsers = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    try:
        config = _load_config(config_path)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _apply_config(subparsers, config)
    except (TypeError, ValueError) as exc:
        print(f"error: bad config value: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("command failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
