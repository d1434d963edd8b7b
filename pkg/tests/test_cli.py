"""CLI subcommands: exit codes, determinism, and the full pipeline path."""

import filecmp
import os
from pathlib import Path

import pytest

from spot.cli import main


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


TINY = ["--companies-per-sector", "1", "--filings-per-company", "1"]


class TestGenCorpus:
    def test_deterministic_directory_trees(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen-corpus", "--seed", "1", "--out", str(a)] + TINY) == 0
        assert main(["gen-corpus", "--seed", "1", "--out", str(b)] + TINY) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["gen-corpus", "--seed", "1", "--out", str(a)] + TINY)
        main(["gen-corpus", "--seed", "2", "--out", str(b)] + TINY)
        assert tree_bytes(a) != tree_bytes(b)

    def test_manifest_written(self, tmp_path):
        out = tmp_path / "c"
        main(["gen-corpus", "--seed", "1", "--out", str(out)] + TINY)
        assert (out / "run_manifest.json").exists()


class TestUsage:
    def test_unknown_flag_exits_1(self, capsys):
        assert main(["gen-corpus", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_exits_1(self):
        assert main(["frobnicate"]) == 1

    def test_help_lists_training_defaults(self, capsys):
        assert main(["train", "--help"]) == 0
        text = capsys.readouterr().out
        for needle in ["0.001", "30", "7", "0.2", "64", "25", "300", "50"]:
            assert needle in text

    def test_missing_input_exits_1(self, tmp_path, capsys):
        assert main(["ingest", "--feed", str(tmp_path / "nope.xml"),
                     "--store", str(tmp_path / "s")]) == 1


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole CLI pipeline once on a tiny corpus."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus"
    store = root / "store"
    assert main(["gen-corpus", "--seed", "3", "--out", str(corpus)] + TINY) == 0
    assert main(["ingest", "--feed", str(corpus / "feed.xml"),
                 "--store", str(store)]) == 0
    assert main(["build-tfidf", "--store", str(store),
                 "--out", str(root / "matrix.json"),
                 "--dump", str(root / "matrix.csv")]) == 0
    assert main(["tune-delta", "--store", str(store),
                 "--labels", str(corpus / "labels.csv"),
                 "--matrix", str(root / "matrix.json"),
                 "--out", str(root / "delta.txt")]) == 0
    assert main([
        "train", "--labels", str(corpus / "labels.csv"),
        "--out", str(root / "model.spot"), "--seed", "0",
        "--epochs", "6", "--patience", "3", "--batch-size", "16",
        "--lr", "0.01", "--emb-dim", "16", "--hidden", "8",
        "--test-fraction", "0.34", "--valid-fraction", "0.25",
        "--test-labels-out", str(root / "test_labels.csv"),
    ]) == 0
    return root


class TestPipeline:
    def test_artifacts_exist(self, pipeline):
        for name in ["matrix.json", "matrix.csv", "delta.txt", "model.spot",
                     "model.history.csv", "test_labels.csv"]:
            assert (pipeline / name).exists(), name

    def test_matrix_dump_format(self, pipeline):
        lines = (pipeline / "matrix.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "token,company,weight"

    def test_eval_writes_report(self, pipeline, capsys):
        assert main(["eval", "--labels", str(pipeline / "test_labels.csv"),
                     "--model", str(pipeline / "model.spot"),
                     "--out", str(pipeline / "report.txt")]) == 0
        report = (pipeline / "report.txt").read_text(encoding="utf-8")
        assert "precision=" in report and "micro_f1=" in report

    def test_extract_all_and_export(self, pipeline):
        delta = float((pipeline / "delta.txt").read_text())
        store = pipeline / "store"
        assert main(["extract", "--store", str(store), "--filing", "all",
                     "--model", str(pipeline / "model.spot"),
                     "--matrix", str(pipeline / "matrix.json"),
                     "--delta", str(delta),
                     "--calendars", str(pipeline / "corpus" / "calendars.csv")]) == 0
        assert list((store / "records").glob("*.jsonl"))
        assert list((store / "grids").glob("*/*.txt"))
        assert main(["export", "--store", str(store),
                     "--out", str(pipeline / "export.csv")]) == 0
        lines = (pipeline / "export.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("company,filing,period")
        assert len(lines) > 1

    def test_extract_non_earnings_warns_and_succeeds(self, pipeline, tmp_path, caplog):
        # Build a store with one non-earnings filing.
        from datetime import datetime, timezone
        from spot.ingestion import FilingDoc, FilingStore

        store_dir = tmp_path / "store2"
        store = FilingStore(store_dir)
        store.store(FilingDoc(
            filing_id="x-f1", company_id="x", sector="Tech", doc_type="8-K",
            filed_at=datetime(2020, 1, 1, tzinfo=timezone.utc),
            body="<p>officer departure</p>", is_earnings=False,
        ))
        with caplog.at_level("WARNING"):
            code = main(["extract", "--store", str(store_dir), "--filing", "x-f1",
                         "--model", str(pipeline / "model.spot"),
                         "--matrix", str(pipeline / "matrix.json"),
                         "--delta", "0.5"])
        assert code == 0
        assert any("not an earnings report" in r.message for r in caplog.records)
        from spot.extraction_service import RecordStore
        assert RecordStore(store_dir).load_records("x-f1") == []

    def test_config_file_presets_flags(self, pipeline, tmp_path):
        config = tmp_path / "spot.cfg"
        config.write_text("seed=9\n", encoding="utf-8")
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["--config", str(config), "gen-corpus", "--out", str(out_a)] + TINY) == 0
        assert main(["gen-corpus", "--seed", "9", "--out", str(out_b)] + TINY) == 0
        assert tree_bytes(out_a) == tree_bytes(out_b)

    def test_env_var_overrides_store_default(self, pipeline, monkeypatch, tmp_path):
        monkeypatch.setenv("SPOT_STORE", str(pipeline / "store"))
        out = tmp_path / "env_export.csv"
        assert main(["export", "--out", str(out)]) == 0
        assert out.exists()
