"""Tokenization, selective-masking vocabulary, and sequence encoding.

The vocabulary is built exclusively from headers that do NOT name operating
segments; at encode time any token outside it collapses to <UNK>. Common
financial language therefore stays visible while company-specific terms all
look alike to the classifier, which is what lets it generalize to companies
it has never seen.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"
NUM_TOKEN = "<NUM>"

OPERATING = "operating"
NON_OPERATING = "non_operating"

SEQUENCE_LENGTH = 25

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingFormatError(Exception):
    """Raised when most lines of an embedding file have the wrong width."""


@dataclass
class LabeledHeader:
    """A rendered header path with its class label and provenance."""

    text: str
    label: Optional[str] = None  # OPERATING or NON_OPERATING
    company_id: str = ""
    sector: str = ""
    filing_id: str = ""
    table_id: str = ""
    row_index: int = -1


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace/punctuation, numbers become <NUM>."""
    return [NUM_TOKEN if t.isdigit() else t for t in _TOKEN_RE.findall(text.lower())]


@dataclass
class Vocabulary:
    token_to_index: dict[str, int]
    min_freq: int

    def __post_init__(self) -> None:
        assert self.token_to_index[PAD_TOKEN] == 0
        assert self.token_to_index[UNK_TOKEN] == 1
        self.index_to_token = [None] * len(self.token_to_index)
        for token, idx in self.token_to_index.items():
            self.index_to_token[idx] = token

    def __len__(self) -> int:
        return len(self.token_to_index)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, 1)


@dataclass
class EncodedSequence:
    """A fixed-length index sequence; original_len is the pre-truncation count."""

    indices: list[int]
    original_len: int


def build_vocab(
    non_operating_headers: Sequence[LabeledHeader], min_freq: int = 2
) -> Vocabulary:
    """Index tokens of non-operating headers with count >= min_freq.

    Ordering is deterministic: descending count, then lexicographic, starting
    after the reserved <PAD>=0 and <UNK>=1 slots. Operating-labeled input is a
    contract violation and raises.
    """
    counts: Counter[str] = Counter()
    for header in non_operating_headers:
        if header.label is not None and header.label != NON_OPERATING:
            raise ValueError(
                f"vocabulary must be built from non-operating headers only, got {header.label!r}"
            )
        counts.update(tokenize(header.text))
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    if not kept:
        logger.warning(
            "no token reached min_freq=%d; vocabulary holds only reserved tokens",
            min_freq,
        )
    token_to_index = {PAD_TOKEN: 0, UNK_TOKEN: 1}
    for token in kept:
        token_to_index[token] = len(token_to_index)
    return Vocabulary(token_to_index=token_to_index, min_freq=min_freq)


def masked_tokens(text: str, vocab: Vocabulary) -> list[str]:
    """Token strings after masking: out-of-vocabulary tokens become <UNK>."""
    return [t if t in vocab else UNK_TOKEN for t in tokenize(text)]


def mask_and_encode(
    text: str, vocab: Vocabulary, seq_len: int = SEQUENCE_LENGTH
) -> EncodedSequence:
    """Tokenize, mask against the vocabulary, and fit to a fixed length.

    Sequences longer than seq_len keep their trailing tokens (left
    truncation); shorter ones are right-padded with <PAD>.
    """
    tokens = tokenize(text)
    original_len = len(tokens)
    indices = [vocab.index(t) for t in tokens]
    if len(indices) > seq_len:
        indices = indices[-seq_len:]
    else:
        indices = indices + [0] * (seq_len - len(indices))
    return EncodedSequence(indices=indices, original_len=original_len)


def load_embeddings(
    path: str | Path, dim: int = 300
) -> dict[str, np.ndarray]:
    """Load a text embedding table: one token plus `dim` decimals per line.

    Malformed lines are skipped and counted; when more than half of a
    non-empty file is malformed the file is rejected as the wrong format.
    """
    vectors: dict[str, np.ndarray] = {}
    skipped = 0
    total = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            total += 1
            parts = line.split()
            if len(parts) != dim + 1:
                skipped += 1
                continue
            try:
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                skipped += 1
    if total == 0:
        logger.warning("embedding file %s is empty", path)
    elif skipped > total / 2:
        raise EmbeddingFormatError(
            f"{skipped}/{total} lines of {path} do not have {dim} values"
        )
    elif skipped:
        logger.warning("skipped %d malformed embedding lines in %s", skipped, path)
    return vectors
