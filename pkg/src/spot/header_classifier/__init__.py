"""Masked-vocabulary bidirectional-GRU header classification and baselines."""

from .baselines import (
    BASELINE_KINDS,
    LogisticRegressionBaseline,
    NaiveBayesBaseline,
    TfidfThresholdBaseline,
    train_baseline,
)
from .model import (
    ModelParams,
    forward_batch,
    gru_step,
    init_params,
    load_model,
    loss_and_grads,
    model_forward,
    save_model,
)
from .text import (
    NON_OPERATING,
    NUM_TOKEN,
    OPERATING,
    PAD_TOKEN,
    SEQUENCE_LENGTH,
    UNK_TOKEN,
    EmbeddingFormatError,
    EncodedSequence,
    LabeledHeader,
    Vocabulary,
    build_vocab,
    load_embeddings,
    mask_and_encode,
    masked_tokens,
    tokenize,
)
from .train import (
    Adam,
    EpochStats,
    TrainConfig,
    encode_headers,
    format_history,
    positive_f1,
    predict,
    train_model,
)

__all__ = [
    "BASELINE_KINDS", "LogisticRegressionBaseline", "NaiveBayesBaseline",
    "TfidfThresholdBaseline", "train_baseline", "ModelParams", "forward_batch",
    "gru_step", "init_params", "load_model", "loss_and_grads", "model_forward",
    "save_model", "NON_OPERATING", "NUM_TOKEN", "OPERATING", "PAD_TOKEN",
    "SEQUENCE_LENGTH", "UNK_TOKEN", "EmbeddingFormatError", "EncodedSequence",
    "LabeledHeader", "Vocabulary", "build_vocab", "load_embeddings",
    "mask_and_encode", "masked_tokens", "tokenize", "Adam", "EpochStats",
    "TrainConfig", "encode_headers", "format_history", "positive_f1",
    "predict", "train_model",
]
