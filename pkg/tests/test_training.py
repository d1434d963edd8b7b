"""Training loop behavior, determinism, and the three baselines."""

import numpy as np
import pytest

from conftest import TOY_CONFIG, toy_headers
from spot.header_classifier import (
    NON_OPERATING,
    OPERATING,
    LabeledHeader,
    TrainConfig,
    build_vocab,
    format_history,
    predict,
    train_baseline,
    train_model,
)
from spot.header_classifier.baselines import LogisticRegressionBaseline


def split_toy():
    headers = toy_headers()
    train = [h for h in headers if h.company_id != "beta02"]
    valid = [h for h in headers if h.company_id == "beta02"]
    return train, valid


class TestTrainModel:
    def test_loss_decreases_early(self):
        train, valid = split_toy()
        cfg = TrainConfig(learning_rate=0.01, max_epochs=3, patience=3,
                          batch_size=8, seed=3, emb_dim=16, hidden=8)
        _, history = train_model(train, valid, cfg)
        losses = [h.train_loss for h in history]
        assert losses[1] < losses[0]
        assert losses[2] < losses[1]

    def test_early_stopping_before_max_epochs(self, toy_model):
        train, valid = split_toy()
        cfg = TrainConfig(learning_rate=0.01, max_epochs=60, patience=2,
                          batch_size=8, seed=3, emb_dim=16, hidden=8)
        _, history = train_model(train, valid, cfg)
        assert len(history) < 60

    def test_same_seed_identical_weights(self):
        train, valid = split_toy()
        cfg = TrainConfig(learning_rate=0.01, max_epochs=2, patience=2,
                          batch_size=8, seed=5, emb_dim=16, hidden=8)
        a, _ = train_model(train, valid, cfg)
        b, _ = train_model(train, valid, cfg)
        for name in a.params:
            assert a.params[name].tobytes() == b.params[name].tobytes(), name

    def test_empty_train_rejected(self):
        with pytest.raises(ValueError):
            train_model([], [], TrainConfig())

    def test_company_overlap_rejected(self):
        headers = toy_headers()
        with pytest.raises(ValueError):
            train_model(headers, headers[:3], TrainConfig())

    def test_history_format(self):
        train, valid = split_toy()
        cfg = TrainConfig(learning_rate=0.01, max_epochs=2, patience=2,
                          batch_size=8, seed=3, emb_dim=16, hidden=8)
        _, history = train_model(train, valid, cfg)
        lines = format_history(history).splitlines()
        assert len(lines) == len(history)
        epoch, loss, f1 = lines[0].split(",")
        assert epoch == "1"
        float(loss), float(f1)


class TestPredict:
    def test_memorized_non_operating_header(self, toy_model):
        label, prob = predict(["Total net sales"], toy_model.vocab, toy_model)[0]
        assert label == NON_OPERATING
        assert prob > 0.5

    def test_unseen_masked_segment(self, toy_model):
        label, prob = predict(["Net sales --> Zorblatt"], toy_model.vocab, toy_model)[0]
        assert label == OPERATING

    def test_empty_header_defined(self, toy_model):
        label, prob = predict([""], toy_model.vocab, toy_model)[0]
        assert label in (OPERATING, NON_OPERATING)
        assert 0.0 < prob < 1.0

    def test_batch_order_preserved(self, toy_model):
        texts = ["Total net sales", "Net sales --> Zorblatt", "Revenue"]
        batch = predict(texts, toy_model.vocab, toy_model)
        singles = [predict([t], toy_model.vocab, toy_model)[0] for t in texts]
        assert [l for l, _ in batch] == [l for l, _ in singles]
        np.testing.assert_allclose(
            [p for _, p in batch], [p for _, p in singles], rtol=0, atol=1e-12
        )

    def test_empty_input(self, toy_model):
        assert predict([], toy_model.vocab, toy_model) == []


class TestBaselines:
    def test_unknown_kind_rejected(self):
        train, valid = split_toy()
        with pytest.raises(ValueError):
            train_baseline("xgboost", train, valid)

    def test_naive_bayes_token_dominance(self):
        # "revenue" appears only in non-operating training headers, so a
        # bare "revenue" header lands non-operating.
        train = [
            LabeledHeader("revenue", NON_OPERATING, "a", "Tech"),
            LabeledHeader("total revenue", NON_OPERATING, "a", "Tech"),
            LabeledHeader("gizmo", OPERATING, "a", "Tech"),
            LabeledHeader("widget line", OPERATING, "a", "Tech"),
        ]
        model = train_baseline("naive_bayes", train, [], min_freq=1)
        label, prob = model.predict(["revenue"])[0]
        assert label == NON_OPERATING
        assert prob > 0.5

    def test_logistic_regression_loss_non_increasing(self):
        train, valid = split_toy()
        vocab = build_vocab(
            [h for h in train if h.label == NON_OPERATING], min_freq=2
        )
        model = LogisticRegressionBaseline(vocab)
        model.fit(train, valid)
        losses = model.loss_history
        assert len(losses) > 2
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    @pytest.mark.parametrize("kind", ["tfidf_threshold", "naive_bayes", "logistic_regression"])
    def test_totality(self, kind):
        train, valid = split_toy()
        model = train_baseline(kind, train, valid)
        texts = [h.text for h in valid] + ["", "never seen tokens whatsoever"]
        out = model.predict(texts)
        assert len(out) == len(texts)
        assert all(label in (OPERATING, NON_OPERATING) for label, _ in out)

    @pytest.mark.parametrize("kind", ["tfidf_threshold", "naive_bayes", "logistic_regression"])
    def test_baselines_learn_toy_split(self, kind):
        train, valid = split_toy()
        model = train_baseline(kind, train, valid)
        correct = sum(
            1 for h, (label, _) in zip(valid, model.predict([h.text for h in valid]))
            if label == h.label
        )
        assert correct / len(valid) > 0.8
