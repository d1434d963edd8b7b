"""Baseline header classifiers over the same masked-token inputs.

Three rungs of the comparison ladder below the recurrent model: a TF-IDF
score threshold, multinomial naive Bayes with add-1 smoothing, and a
bag-of-tokens logistic regression trained by plain gradient descent.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .text import (
    NON_OPERATING,
    OPERATING,
    UNK_TOKEN,
    LabeledHeader,
    Vocabulary,
    build_vocab,
    masked_tokens,
)

BASELINE_KINDS = ("tfidf_threshold", "naive_bayes", "logistic_regression")


class TfidfThresholdBaseline:
    """Sum of unmasked-token TF-IDF weights against a tuned threshold.

    Headers are the documents for IDF purposes; <UNK> tokens contribute
    nothing, so headers dominated by masked (company-specific) terms score
    near zero and fall to the operating side.
    """

    def __init__(self, vocab: Vocabulary) -> None:
        self.vocab = vocab
        self.idf: dict[str, float] = {}
        self.threshold = 0.0

    def score(self, text: str) -> float:
        counts = Counter(masked_tokens(text, self.vocab))
        return sum(
            c * self.idf.get(t, 0.0) for t, c in counts.items() if t != UNK_TOKEN
        )

    def fit(self, train: Sequence[LabeledHeader], valid: Sequence[LabeledHeader]) -> None:
        docs = [set(masked_tokens(h.text, self.vocab)) for h in train]
        df: Counter[str] = Counter()
        for doc in docs:
            df.update(doc)
        n = len(docs)
        self.idf = {t: math.log(n / c) for t, c in df.items() if t != UNK_TOKEN}

        tuning = valid if valid else train
        scores = np.array([self.score(h.text) for h in tuning])
        gold = np.array([h.label == NON_OPERATING for h in tuning])
        candidates = np.unique(scores)
        # Midpoints between distinct scores, plus the extremes.
        thresholds = np.concatenate(
            [[candidates[0] - 1.0], (candidates[:-1] + candidates[1:]) / 2.0,
             [candidates[-1] + 1.0]]
        )
        best = (-1.0, 0.0)
        for theta in thresholds:
            f1 = _f1(scores >= theta, gold)
            if f1 > best[0]:
                best = (f1, float(theta))
        self.threshold = best[1]

    def predict(self, headers: Sequence[str]) -> list[tuple[str, float]]:
        out = []
        for text in headers:
            s = self.score(text)
            out.append((NON_OPERATING if s >= self.threshold else OPERATING, s))
        return out


class NaiveBayesBaseline:
    """Multinomial NB over masked token counts with add-1 smoothing."""

    def __init__(self, vocab: Vocabulary) -> None:
        self.vocab = vocab
        self.log_prior: dict[str, float] = {}
        self.log_likelihood: dict[str, dict[str, float]] = {}
        self.fallback: dict[str, float] = {}

    def fit(self, train: Sequence[LabeledHeader], valid: Sequence[LabeledHeader]) -> None:
        if not train:
            raise ValueError("empty training set")
        class_counts: dict[str, Counter[str]] = {
            OPERATING: Counter(), NON_OPERATING: Counter()
        }
        class_docs = {OPERATING: 0, NON_OPERATING: 0}
        feature_space: set[str] = set()
        for h in train:
            tokens = masked_tokens(h.text, self.vocab)
            class_counts[h.label].update(tokens)
            class_docs[h.label] += 1
            feature_space.update(tokens)
        total_docs = sum(class_docs.values())
        v = len(feature_space)
        for label, counts in class_counts.items():
            self.log_prior[label] = math.log(
                max(class_docs[label], 1) / total_docs
            )
            denom = sum(counts.values()) + v
            self.log_likelihood[label] = {
                t: math.log((counts[t] + 1) / denom) for t in feature_space
            }
            self.fallback[label] = math.log(1 / denom)

    def predict(self, headers: Sequence[str]) -> list[tuple[str, float]]:
        out = []
        for text in headers:
            tokens = masked_tokens(text, self.vocab)
            scores = {}
            for label in (OPERATING, NON_OPERATING):
                s = self.log_prior[label]
                table = self.log_likelihood[label]
                for t in tokens:
                    s += table.get(t, self.fallback[label])
                scores[label] = s
            # Probability of the positive class via a stable softmax.
            m = max(scores.values())
            exp_pos = math.exp(scores[NON_OPERATING] - m)
            exp_neg = math.exp(scores[OPERATING] - m)
            p = exp_pos / (exp_pos + exp_neg)
            out.append((NON_OPERATING if p >= 0.5 else OPERATING, p))
        return out


class LogisticRegressionBaseline:
    """Bag-of-masked-tokens logistic regression, L2 1e-4, gradient descent.

    Full-batch descent with backtracking line search, run until the gradient
    max-norm falls below 1e-6 or the iteration cap is hit; the line search
    makes the loss non-increasing at every accepted step.
    """

    def __init__(self, vocab: Vocabulary, l2: float = 1e-4,
                 tolerance: float = 1e-6, max_iter: int = 500) -> None:
        self.vocab = vocab
        self.l2 = l2
        self.tolerance = tolerance
        self.max_iter = max_iter
        self.w = np.zeros(len(vocab))
        self.b = 0.0
        self.loss_history: list[float] = []

    def _features(self, headers: Sequence[str]) -> np.ndarray:
        X = np.zeros((len(headers), len(self.vocab)))
        for i, text in enumerate(headers):
            for t in masked_tokens(text, self.vocab):
                X[i, self.vocab.index(t)] += 1.0
        return X

    def _loss(self, X, y, w, b) -> float:
        z = X @ w + b
        # log(1 + exp(-|z|)) form keeps the loss finite for large margins.
        losses = np.logaddexp(0.0, -z) * y + np.logaddexp(0.0, z) * (1 - y)
        return float(losses.mean() + 0.5 * self.l2 * (w @ w))

    def fit(self, train: Sequence[LabeledHeader], valid: Sequence[LabeledHeader]) -> None:
        if not train:
            raise ValueError("empty training set")
        X = self._features([h.text for h in train])
        y = np.array([1.0 if h.label == NON_OPERATING else 0.0 for h in train])
        n = len(train)
        w = np.zeros(X.shape[1])
        b = 0.0
        loss = self._loss(X, y, w, b)
        self.loss_history = [loss]
        step = 1.0
        for _ in range(self.max_iter):
            p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
            err = (p - y) / n
            gw = X.T @ err + self.l2 * w
            gb = float(err.sum())
            gmax = max(float(np.abs(gw).max()), abs(gb))
            if gmax <= self.tolerance:
                break
            step = min(step * 2.0, 1024.0)
            while step > 1e-12:
                cand_loss = self._loss(X, y, w - step * gw, b - step * gb)
                if cand_loss <= loss:
                    break
                step /= 2.0
            w = w - step * gw
            b = b - step * gb
            loss = self._loss(X, y, w, b)
            self.loss_history.append(loss)
        self.w = w
        self.b = b

    def predict(self, headers: Sequence[str]) -> list[tuple[str, float]]:
        X = self._features(headers)
        probs = 1.0 / (1.0 + np.exp(-(X @ self.w + self.b)))
        return [
            (NON_OPERATING if p >= 0.5 else OPERATING, float(p)) for p in probs
        ]


def train_baseline(
    kind: str,
    train: Sequence[LabeledHeader],
    valid: Sequence[LabeledHeader],
    vocab: Optional[Vocabulary] = None,
    min_freq: int = 2,
):
    """Fit one of the baseline kinds; the masking vocabulary is shared."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    if not train:
        raise ValueError("empty training set")
    if vocab is None:
        vocab = build_vocab(
            [h for h in train if h.label == NON_OPERATING], min_freq=min_freq
        )
    if kind == "tfidf_threshold":
        model = TfidfThresholdBaseline(vocab)
    elif kind == "naive_bayes":
        model = NaiveBayesBaseline(vocab)
    else:
        model = LogisticRegressionBaseline(vocab)
    model.fit(train, valid)
    return model


def _f1(pred_pos: np.ndarray, gold_pos: np.ndarray) -> float:
    tp = int(np.sum(pred_pos & gold_pos))
    fp = int(np.sum(pred_pos & ~gold_pos))
    fn = int(np.sum(~pred_pos & gold_pos))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
