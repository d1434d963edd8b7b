"""Training loop: Adam, binary cross-entropy, validation-F1 early stopping.

Training is single-threaded and fully deterministic for a fixed seed: batch
order, weight initialization, and dropout masks all derive from one seeded
generator, so two runs with the same configuration produce bit-identical
weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .model import ModelParams, forward_batch, init_params, loss_and_grads
from .text import (
    NON_OPERATING,
    OPERATING,
    LabeledHeader,
    Vocabulary,
    build_vocab,
    mask_and_encode,
)

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyperparameters; defaults follow the final model configuration."""

    dropout_rate: float = 0.2
    learning_rate: float = 0.001
    max_epochs: int = 30
    patience: int = 7
    batch_size: int = 64
    seed: int = 0
    seq_len: int = 25
    emb_dim: int = 300
    hidden: int = 50
    min_freq: int = 2
    threshold: float = 0.5
    freeze_embeddings: bool = False
    dtype: str = "float32"


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_f1: float


class Adam:
    """Standard Adam with bias correction; one slot pair per tensor."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             skip: Sequence[str] = ()) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            if name in skip:
                continue
            g = g.astype(params[name].dtype, copy=False)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * (g * g)
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            params[name] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(
                params[name].dtype
            )


def encode_headers(
    headers: Sequence[LabeledHeader], vocab: Vocabulary, seq_len: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorize headers: (indices, lengths, targets); non-operating is 1."""
    indices = np.zeros((len(headers), seq_len), dtype=np.int64)
    lengths = np.zeros(len(headers), dtype=np.int64)
    targets = np.zeros(len(headers), dtype=np.float64)
    for i, header in enumerate(headers):
        seq = mask_and_encode(header.text, vocab, seq_len)
        indices[i] = seq.indices
        lengths[i] = seq.original_len
        targets[i] = 1.0 if header.label == NON_OPERATING else 0.0
    return indices, lengths, targets


def positive_f1(pred_pos: np.ndarray, gold_pos: np.ndarray) -> float:
    """F1 of the positive class from boolean prediction/gold vectors."""
    tp = int(np.sum(pred_pos & gold_pos))
    fp = int(np.sum(pred_pos & ~gold_pos))
    fn = int(np.sum(~pred_pos & gold_pos))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _batched_probs(model: ModelParams, indices, lengths, batch_size: int = 512) -> np.ndarray:
    probs = np.zeros(len(indices), dtype=np.float64)
    for start in range(0, len(indices), batch_size):
        stop = start + batch_size
        p, _ = forward_batch(model, indices[start:stop], lengths[start:stop])
        probs[start:stop] = p
    return probs


def train_model(
    train: Sequence[LabeledHeader],
    valid: Sequence[LabeledHeader],
    cfg: Optional[TrainConfig] = None,
    embeddings: Optional[dict[str, np.ndarray]] = None,
    vocab: Optional[Vocabulary] = None,
) -> tuple[ModelParams, list[EpochStats]]:
    """Train the BiGRU; returns best-epoch weights and per-epoch history.

    The vocabulary is built from the non-operating training headers unless one
    is supplied. Train and validation sets must be company-disjoint. Stops
    early after `patience` epochs without a validation-F1 improvement and
    returns the weights of the best epoch.
    """
    cfg = cfg or TrainConfig()
    if not train:
        raise ValueError("empty training set")
    overlap = {h.company_id for h in train} & {h.company_id for h in valid}
    if overlap:
        raise ValueError(f"train/valid share companies: {sorted(overlap)[:5]}")

    if vocab is None:
        vocab = build_vocab(
            [h for h in train if h.label == NON_OPERATING], min_freq=cfg.min_freq
        )
    rng = np.random.default_rng(cfg.seed)
    model = init_params(
        vocab_size=len(vocab), emb_dim=cfg.emb_dim, hidden=cfg.hidden,
        seq_len=cfg.seq_len, rng=rng, dtype=np.dtype(cfg.dtype), vocab=vocab,
        embeddings=embeddings,
    )
    optimizer = Adam(model.params, lr=cfg.learning_rate)
    skip = ("emb",) if cfg.freeze_embeddings else ()

    x_train, len_train, y_train = encode_headers(train, vocab, cfg.seq_len)
    x_valid, len_valid, y_valid = encode_headers(valid, vocab, cfg.seq_len)
    y_train = y_train.astype(model.dtype)

    history: list[EpochStats] = []
    best_f1 = -1.0
    best_model = model.copy()
    stale = 0
    n = len(train)
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads, _ = loss_and_grads(
                model, x_train[batch], len_train[batch], y_train[batch],
                dropout_rate=cfg.dropout_rate, dropout_rng=rng, update_stats=True,
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            optimizer.step(model.params, grads, skip=skip)
            total_loss += loss * len(batch)
        train_loss = total_loss / n

        if len(valid):
            probs = _batched_probs(model, x_valid, len_valid)
            valid_f1 = positive_f1(probs >= cfg.threshold, y_valid >= 0.5)
        else:
            valid_f1 = 0.0
        history.append(EpochStats(epoch, train_loss, valid_f1))
        logger.info("epoch %d: train_loss %.4f valid_f1 %.4f", epoch, train_loss, valid_f1)

        if valid_f1 > best_f1:
            best_f1 = valid_f1
            best_model = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d (patience %d)", epoch, cfg.patience)
                break
    return best_model, history


def predict(
    headers: Sequence[str],
    vocab: Vocabulary,
    model: ModelParams,
    threshold: float = 0.5,
) -> list[tuple[str, float]]:
    """Label each header; non-operating when probability >= threshold."""
    if not headers:
        return []
    indices = np.zeros((len(headers), model.seq_len), dtype=np.int64)
    lengths = np.zeros(len(headers), dtype=np.int64)
    for i, text in enumerate(headers):
        seq = mask_and_encode(text, vocab, model.seq_len)
        indices[i] = seq.indices
        lengths[i] = seq.original_len
    probs = _batched_probs(model, indices, lengths)
    return [
        (NON_OPERATING if p >= threshold else OPERATING, float(p)) for p in probs
    ]


def format_history(history: Sequence[EpochStats]) -> str:
    """Metrics history lines: "epoch,train_loss,valid_f1"."""
    return "".join(f"{h.epoch},{h.train_loss!r},{h.valid_f1!r}\n" for h in history)
