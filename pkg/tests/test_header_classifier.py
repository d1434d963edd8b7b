"""Tokenization, masking vocabulary, sequence encoding, embedding loading."""

import numpy as np
import pytest

from spot.header_classifier import (
    NON_OPERATING,
    OPERATING,
    EmbeddingFormatError,
    LabeledHeader,
    build_vocab,
    load_embeddings,
    mask_and_encode,
    masked_tokens,
    tokenize,
)


class TestTokenize:
    def test_path_separator_stripped(self):
        assert tokenize("Net sales --> Products") == ["net", "sales", "products"]

    def test_ampersand_split(self):
        assert tokenize("R&D Expense") == ["r", "d", "expense"]

    def test_empty(self):
        assert tokenize("") == []

    def test_numbers_become_placeholder(self):
        assert tokenize("Q3 2020 revenue") == ["q3", "<NUM>", "revenue"]


def non_op(text):
    return LabeledHeader(text, NON_OPERATING, "c1", "Tech")


class TestBuildVocab:
    def test_ordering_count_then_lexicographic(self):
        vocab = build_vocab([non_op("total revenue"), non_op("revenue")], min_freq=1)
        assert vocab.token_to_index == {"<PAD>": 0, "<UNK>": 1, "revenue": 2, "total": 3}

    def test_min_freq_filters_everything(self, caplog):
        with caplog.at_level("WARNING"):
            vocab = build_vocab([non_op("total revenue"), non_op("revenue")], min_freq=3)
        assert len(vocab) == 2

    def test_operating_headers_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([LabeledHeader("iphone", OPERATING, "c1", "Tech")])

    def test_empty_input(self, caplog):
        with caplog.at_level("WARNING"):
            vocab = build_vocab([], min_freq=2)
        assert set(vocab.token_to_index) == {"<PAD>", "<UNK>"}


class TestMaskAndEncode:
    def vocab(self):
        return build_vocab([non_op("total revenue"), non_op("revenue")], min_freq=1)

    def test_oov_masked(self):
        vocab = self.vocab()
        seq = mask_and_encode("iPhone revenue", vocab)
        assert seq.indices[:2] == [1, vocab.token_to_index["revenue"]]
        assert seq.indices[2:] == [0] * 23
        assert seq.original_len == 2

    def test_all_in_vocab_no_unk(self):
        seq = mask_and_encode("total revenue", self.vocab())
        assert 1 not in seq.indices

    def test_truncation_keeps_tail(self):
        text = " ".join(f"w{i}" for i in range(30)) + " revenue"
        vocab = self.vocab()
        seq = mask_and_encode(text, vocab)
        assert len(seq.indices) == 25
        assert seq.original_len == 31
        # left truncation: the trailing in-vocab token survives
        assert seq.indices[-1] == vocab.token_to_index["revenue"]

    def test_masked_tokens_strings(self):
        assert masked_tokens("iPhone revenue", self.vocab()) == ["<UNK>", "revenue"]


class TestLoadEmbeddings:
    def write(self, tmp_path, lines):
        path = tmp_path / "emb.txt"
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return path

    def test_well_formed(self, tmp_path):
        dim = 4
        path = self.write(tmp_path, ["alpha 1 2 3 4", "beta 0.5 0.5 0.5 0.5"])
        table = load_embeddings(path, dim=dim)
        assert set(table) == {"alpha", "beta"}
        np.testing.assert_array_equal(table["alpha"], [1, 2, 3, 4])

    def test_short_line_skipped(self, tmp_path, caplog):
        path = self.write(tmp_path, ["alpha 1 2 3 4", "beta 1 2 3"])
        with caplog.at_level("WARNING"):
            table = load_embeddings(path, dim=4)
        assert set(table) == {"alpha"}
        assert any("skipped 1" in r.message for r in caplog.records)

    def test_mostly_malformed_rejected(self, tmp_path):
        path = self.write(tmp_path, ["a 1 2", "b 3 4", "c 1 2 3 4"])
        with pytest.raises(EmbeddingFormatError):
            load_embeddings(path, dim=4)

    def test_empty_file(self, tmp_path, caplog):
        path = self.write(tmp_path, [])
        with caplog.at_level("WARNING"):
            table = load_embeddings(path, dim=4)
        assert table == {}
