"""Bidirectional GRU header classifier, implemented directly on numpy.

Architecture: embedding lookup -> forward and backward GRU passes over the
non-padded positions -> per-step concatenation of both 50-dim states ->
average-pool and max-pool over time, concatenated to 200 dims -> batch
normalization -> dropout (training only) -> elementwise swish pre-activation
-> a single dense unit -> logistic output giving the probability of the
positive (non-operating) class. The swish sits before the dense unit:
composing it after the scalar dense output would floor the reachable
probabilities near 0.43 and kill the gradient for negative-class examples.

The GRU recurrence, per step and direction:

    z = sigmoid(x Wz + h_prev Uz + bz)
    r = sigmoid(x Wr + h_prev Ur + br)
    c = tanh(x Wh + (r * h_prev) Uh + bh)
    h = (1 - z) * h_prev + z * c

Gradients for every parameter tensor are computed analytically; the test
suite checks them against central finite differences in 64-bit arithmetic.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .text import EncodedSequence, Vocabulary

GATE_NAMES = ("Wz", "Wr", "Wh", "Uz", "Ur", "Uh", "bz", "br", "bh")

_MAGIC = b"SPOTMODEL 1\n"


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class ModelParams:
    """All trainable tensors plus batch-norm running statistics."""

    def __init__(
        self,
        vocab_size: int,
        emb_dim: int = 300,
        hidden: int = 50,
        seq_len: int = 25,
        dtype=np.float32,
        bn_eps: float = 1e-5,
        bn_momentum: float = 0.1,
        vocab: Optional[Vocabulary] = None,
    ) -> None:
        self.vocab_size = vocab_size
        self.emb_dim = emb_dim
        self.hidden = hidden
        self.seq_len = seq_len
        self.dtype = np.dtype(dtype)
        self.bn_eps = bn_eps
        self.bn_momentum = bn_momentum
        self.vocab = vocab
        self.params: dict[str, np.ndarray] = {}
        pooled = 4 * hidden
        self.running_mean = np.zeros(pooled, dtype=self.dtype)
        self.running_var = np.ones(pooled, dtype=self.dtype)

    @property
    def pooled_dim(self) -> int:
        return 4 * self.hidden

    def direction_block(self, prefix: str) -> dict[str, np.ndarray]:
        """The nine tensors of one GRU direction ("f" forward, "b" backward)."""
        return {name: self.params[f"{prefix}_{name}"] for name in GATE_NAMES}

    def copy(self) -> "ModelParams":
        clone = ModelParams(
            self.vocab_size, self.emb_dim, self.hidden, self.seq_len,
            self.dtype, self.bn_eps, self.bn_momentum, self.vocab,
        )
        clone.params = {k: v.copy() for k, v in self.params.items()}
        clone.running_mean = self.running_mean.copy()
        clone.running_var = self.running_var.copy()
        return clone


def init_params(
    vocab_size: int,
    emb_dim: int = 300,
    hidden: int = 50,
    seq_len: int = 25,
    rng: Optional[np.random.Generator] = None,
    dtype=np.float32,
    vocab: Optional[Vocabulary] = None,
    embeddings: Optional[dict[str, np.ndarray]] = None,
) -> ModelParams:
    """Initialize weights uniform(-0.05, 0.05), biases zero, BN scale one.

    When a pre-trained embedding table is given, rows of in-vocabulary tokens
    are seeded from it (the rest keep their random initialization).
    """
    rng = rng or np.random.default_rng(0)
    model = ModelParams(vocab_size, emb_dim, hidden, seq_len, dtype, vocab=vocab)

    def uniform(*shape):
        return rng.uniform(-0.05, 0.05, size=shape).astype(model.dtype)

    model.params["emb"] = uniform(vocab_size, emb_dim)
    if embeddings and vocab is not None:
        hits = 0
        for token, idx in vocab.token_to_index.items():
            vec = embeddings.get(token)
            if vec is not None and vec.shape == (emb_dim,):
                model.params["emb"][idx] = vec.astype(model.dtype)
                hits += 1
    for prefix in ("f", "b"):
        for gate in ("z", "r", "h"):
            model.params[f"{prefix}_W{gate}"] = uniform(emb_dim, hidden)
            model.params[f"{prefix}_U{gate}"] = uniform(hidden, hidden)
            model.params[f"{prefix}_b{gate}"] = np.zeros(hidden, dtype=model.dtype)
    pooled = model.pooled_dim
    model.params["bn_gamma"] = np.ones(pooled, dtype=model.dtype)
    model.params["bn_beta"] = np.zeros(pooled, dtype=model.dtype)
    model.params["dense_w"] = uniform(pooled)
    model.params["dense_b"] = np.zeros(1, dtype=model.dtype)
    return model


def gru_step(
    x: np.ndarray, h_prev: np.ndarray, block: dict[str, np.ndarray]
) -> np.ndarray:
    """One GRU recurrence step; accepts single vectors or batched rows."""
    if x.shape[-1] != block["Wz"].shape[0] or h_prev.shape[-1] != block["Uz"].shape[0]:
        raise ValueError(
            f"shape mismatch: x {x.shape}, h_prev {h_prev.shape}, "
            f"Wz {block['Wz'].shape}, Uz {block['Uz'].shape}"
        )
    z = sigmoid(x @ block["Wz"] + h_prev @ block["Uz"] + block["bz"])
    r = sigmoid(x @ block["Wr"] + h_prev @ block["Ur"] + block["br"])
    c = np.tanh(x @ block["Wh"] + (r * h_prev) @ block["Uh"] + block["bh"])
    return (1.0 - z) * h_prev + z * c


def _run_direction(
    X: np.ndarray,
    mask: np.ndarray,
    block: dict[str, np.ndarray],
    reverse: bool,
) -> tuple[np.ndarray, list]:
    """Run one GRU direction over all steps; returns states and step caches."""
    B, T, _ = X.shape
    H = block["Uz"].shape[0]
    # One fat GEMM for every input projection of every step.
    Az = X @ block["Wz"] + block["bz"]
    Ar = X @ block["Wr"] + block["br"]
    Ah = X @ block["Wh"] + block["bh"]
    h = np.zeros((B, H), dtype=X.dtype)
    states = np.zeros((B, T, H), dtype=X.dtype)
    caches = [None] * T
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        m = mask[:, t:t + 1]
        z = sigmoid(Az[:, t] + h @ block["Uz"])
        r = sigmoid(Ar[:, t] + h @ block["Ur"])
        rh = r * h
        c = np.tanh(Ah[:, t] + rh @ block["Uh"])
        h_raw = (1.0 - z) * h + z * c
        h_new = m * h_raw + (1.0 - m) * h
        caches[t] = (h, z, r, c)
        states[:, t] = h_new
        h = h_new
    return states, caches


def _backward_direction(
    dstates: np.ndarray,
    X: np.ndarray,
    mask: np.ndarray,
    block: dict[str, np.ndarray],
    caches: list,
    reverse: bool,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Backprop one direction; returns per-tensor grads and dX."""
    B, T, _ = X.shape
    grads = {name: np.zeros_like(block[name]) for name in GATE_NAMES}
    dAz = np.zeros((B, T, block["Uz"].shape[0]), dtype=X.dtype)
    dAr = np.zeros_like(dAz)
    dAh = np.zeros_like(dAz)
    dh = np.zeros((B, block["Uz"].shape[0]), dtype=X.dtype)
    order = range(T) if reverse else range(T - 1, -1, -1)
    for t in order:
        dh = dh + dstates[:, t]
        h_prev, z, r, c = caches[t]
        m = mask[:, t:t + 1]
        dh_raw = dh * m
        dh_prev = dh * (1.0 - m)

        dz = dh_raw * (c - h_prev)
        dc = dh_raw * z
        dh_prev = dh_prev + dh_raw * (1.0 - z)

        da_c = dc * (1.0 - c * c)
        dAh[:, t] = da_c
        grads["Uh"] += (r * h_prev).T @ da_c
        drh = da_c @ block["Uh"].T
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r

        da_r = dr * r * (1.0 - r)
        dAr[:, t] = da_r
        grads["Ur"] += h_prev.T @ da_r
        dh_prev = dh_prev + da_r @ block["Ur"].T

        da_z = dz * z * (1.0 - z)
        dAz[:, t] = da_z
        grads["Uz"] += h_prev.T @ da_z
        dh_prev = dh_prev + da_z @ block["Uz"].T

        dh = dh_prev
    X2 = X.reshape(B * T, -1)
    grads["Wz"] = X2.T @ dAz.reshape(B * T, -1)
    grads["Wr"] = X2.T @ dAr.reshape(B * T, -1)
    grads["Wh"] = X2.T @ dAh.reshape(B * T, -1)
    grads["bz"] = dAz.sum(axis=(0, 1))
    grads["br"] = dAr.sum(axis=(0, 1))
    grads["bh"] = dAh.sum(axis=(0, 1))
    dX = (
        dAz.reshape(B * T, -1) @ block["Wz"].T
        + dAr.reshape(B * T, -1) @ block["Wr"].T
        + dAh.reshape(B * T, -1) @ block["Wh"].T
    ).reshape(B, T, -1)
    return grads, dX


def forward_batch(
    model: ModelParams,
    indices: np.ndarray,
    lengths: np.ndarray,
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    dropout_rng: Optional[np.random.Generator] = None,
    update_stats: bool = False,
) -> tuple[np.ndarray, dict]:
    """Run the full network on a batch; returns probabilities and a cache.

    Pooling covers only the first original_len positions of each sequence;
    all-pad sequences pool to zeros and still produce a defined probability.
    In train mode batch normalization uses batch statistics (and updates the
    running ones when update_stats is set); in eval mode it uses the stored
    running statistics.
    """
    p = model.params
    B, T = indices.shape
    eff_len = np.minimum(lengths, T).astype(np.int64)
    mask = (np.arange(T)[None, :] < eff_len[:, None]).astype(model.dtype)

    X = p["emb"][indices]
    states_f, caches_f = _run_direction(X, mask, model.direction_block("f"), reverse=False)
    states_b, caches_b = _run_direction(X, mask, model.direction_block("b"), reverse=True)
    S = np.concatenate([states_f, states_b], axis=2)  # (B, T, 2H)

    denom = np.maximum(eff_len, 1).astype(model.dtype)[:, None]
    avg = (S * mask[:, :, None]).sum(axis=1) / denom
    neg_inf = np.finfo(model.dtype).min
    S_masked = np.where(mask[:, :, None] > 0, S, neg_inf)
    arg = S_masked.argmax(axis=1)  # (B, 2H)
    mx = np.take_along_axis(S_masked, arg[:, None, :], axis=1)[:, 0, :]
    empty = eff_len == 0
    mx[empty] = 0.0
    pooled = np.concatenate([avg, mx], axis=1)  # (B, 4H)

    if train_mode:
        mu = pooled.mean(axis=0)
        var = pooled.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + model.bn_eps)
        xhat = (pooled - mu) * inv_std
        if update_stats:
            mom = model.bn_momentum
            model.running_mean = ((1 - mom) * model.running_mean + mom * mu).astype(model.dtype)
            model.running_var = ((1 - mom) * model.running_var + mom * var).astype(model.dtype)
    else:
        inv_std = 1.0 / np.sqrt(model.running_var + model.bn_eps)
        xhat = (pooled - model.running_mean) * inv_std
    y = p["bn_gamma"] * xhat + p["bn_beta"]

    if train_mode and dropout_rate > 0.0:
        if dropout_rng is None:
            raise ValueError("dropout in train mode requires an rng")
        keep = (dropout_rng.random(y.shape) >= dropout_rate).astype(model.dtype)
        keep /= model.dtype.type(1.0 - dropout_rate)
        y = y * keep
    else:
        keep = None

    sy = sigmoid(y)
    sw = y * sy  # swish pre-activation, elementwise
    z_dense = sw @ p["dense_w"] + p["dense_b"][0]
    prob = sigmoid(z_dense)

    cache = {
        "indices": indices, "mask": mask, "eff_len": eff_len, "X": X,
        "caches_f": caches_f, "caches_b": caches_b,
        "avg_denom": denom, "argmax": arg, "empty": empty,
        "xhat": xhat, "inv_std": inv_std, "train_mode": train_mode,
        "keep": keep, "y": y, "sy": sy, "sw": sw, "prob": prob,
    }
    return prob, cache


def loss_and_grads(
    model: ModelParams,
    indices: np.ndarray,
    lengths: np.ndarray,
    targets: np.ndarray,
    dropout_rate: float = 0.0,
    dropout_rng: Optional[np.random.Generator] = None,
    update_stats: bool = False,
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Mean binary cross-entropy and analytic gradients for one train batch."""
    p = model.params
    prob, cache = forward_batch(
        model, indices, lengths, train_mode=True,
        dropout_rate=dropout_rate, dropout_rng=dropout_rng,
        update_stats=update_stats,
    )
    B = indices.shape[0]
    eps = 1e-12
    # float64 for the loss arithmetic: float32 probabilities saturate to
    # exactly 1.0, where the clip bound 1-1e-12 would be a no-op.
    clipped = np.clip(prob.astype(np.float64), eps, 1.0 - eps)
    targets64 = targets.astype(np.float64)
    loss = float(-np.mean(targets64 * np.log(clipped) + (1 - targets64) * np.log(1 - clipped)))

    grads: dict[str, np.ndarray] = {}
    dz = (prob - targets) / B  # d(BCE)/d(dense logit)
    sw = cache["sw"]
    grads["dense_w"] = sw.T @ dz
    grads["dense_b"] = np.array([dz.sum()], dtype=model.dtype)
    dsw = np.outer(dz, p["dense_w"])
    y = cache["y"]
    sy = cache["sy"]
    dy = dsw * (sy + y * sy * (1.0 - sy))  # swish'(y)

    if cache["keep"] is not None:
        dy = dy * cache["keep"]

    xhat = cache["xhat"]
    inv_std = cache["inv_std"]
    grads["bn_gamma"] = (dy * xhat).sum(axis=0)
    grads["bn_beta"] = dy.sum(axis=0)
    dxhat = dy * p["bn_gamma"]
    dpooled = (
        inv_std / B
        * (B * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    )

    H2 = 2 * model.hidden
    davg = dpooled[:, :H2]
    dmx = dpooled[:, H2:].copy()
    dmx[cache["empty"]] = 0.0

    mask = cache["mask"]
    T = indices.shape[1]
    dS = (davg / cache["avg_denom"])[:, None, :] * mask[:, :, None]
    dS_max = np.zeros_like(dS)
    np.put_along_axis(dS_max, cache["argmax"][:, None, :], dmx[:, None, :], axis=1)
    dS = dS + dS_max

    H = model.hidden
    grads_f, dX_f = _backward_direction(
        dS[:, :, :H], cache["X"], mask, model.direction_block("f"),
        cache["caches_f"], reverse=False,
    )
    grads_b, dX_b = _backward_direction(
        dS[:, :, H:], cache["X"], mask, model.direction_block("b"),
        cache["caches_b"], reverse=True,
    )
    for name in GATE_NAMES:
        grads[f"f_{name}"] = grads_f[name]
        grads[f"b_{name}"] = grads_b[name]

    demb = np.zeros_like(p["emb"])
    dX = dX_f + dX_b
    np.add.at(demb, indices.reshape(-1), dX.reshape(-1, model.emb_dim))
    grads["emb"] = demb
    return loss, grads, prob


def model_forward(
    seq: EncodedSequence,
    model: ModelParams,
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    dropout_rng: Optional[np.random.Generator] = None,
) -> float:
    """Probability of the positive (non-operating) class for one sequence."""
    indices = np.array([seq.indices], dtype=np.int64)
    lengths = np.array([seq.original_len], dtype=np.int64)
    prob, _ = forward_batch(
        model, indices, lengths, train_mode=train_mode,
        dropout_rate=dropout_rate, dropout_rng=dropout_rng,
    )
    return float(prob[0])


def save_model(model: ModelParams, path, extra: Optional[dict] = None) -> None:
    """Write a self-describing, byte-deterministic checkpoint.

    Layout: magic line, one JSON metadata line (config, vocabulary, tensor
    shapes/dtypes in order), then the raw little-endian tensor bytes. Loading
    reproduces outputs bit-exactly.
    """
    names = sorted(model.params)
    meta = {
        "config": {
            "vocab_size": model.vocab_size,
            "emb_dim": model.emb_dim,
            "hidden": model.hidden,
            "seq_len": model.seq_len,
            "dtype": model.dtype.str,
            "bn_eps": model.bn_eps,
            "bn_momentum": model.bn_momentum,
        },
        "tensors": [
            {"name": n, "shape": list(model.params[n].shape),
             "dtype": np.dtype(model.params[n].dtype).str}
            for n in names
        ]
        + [
            {"name": "running_mean", "shape": list(model.running_mean.shape),
             "dtype": np.dtype(model.running_mean.dtype).str},
            {"name": "running_var", "shape": list(model.running_var.shape),
             "dtype": np.dtype(model.running_var.dtype).str},
        ],
        "vocab": model.vocab.index_to_token if model.vocab else None,
        "min_freq": model.vocab.min_freq if model.vocab else None,
        "extra": extra or {},
    }
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(json.dumps(meta, sort_keys=True).encode("utf-8"))
        handle.write(b"\n")
        for n in names:
            handle.write(np.ascontiguousarray(model.params[n]).tobytes())
        handle.write(np.ascontiguousarray(model.running_mean).tobytes())
        handle.write(np.ascontiguousarray(model.running_var).tobytes())


def load_model(path) -> tuple[ModelParams, dict]:
    """Rebuild a checkpoint written by save_model; returns (model, extra)."""
    with open(path, "rb") as handle:
        magic = handle.readline()
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a model checkpoint")
        meta = json.loads(handle.readline().decode("utf-8"))
        blob = handle.read()
    cfg = meta["config"]
    vocab = None
    if meta["vocab"] is not None:
        vocab = Vocabulary(
            token_to_index={t: i for i, t in enumerate(meta["vocab"])},
            min_freq=meta["min_freq"],
        )
    model = ModelParams(
        cfg["vocab_size"], cfg["emb_dim"], cfg["hidden"], cfg["seq_len"],
        dtype=np.dtype(cfg["dtype"]), bn_eps=cfg["bn_eps"],
        bn_momentum=cfg["bn_momentum"], vocab=vocab,
    )
    offset = 0
    for spec in meta["tensors"]:
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        size = count * dt.itemsize
        arr = np.frombuffer(blob[offset:offset + size], dtype=dt).reshape(spec["shape"]).copy()
        offset += size
        if spec["name"] == "running_mean":
            model.running_mean = arr
        elif spec["name"] == "running_var":
            model.running_var = arr
        else:
            model.params[spec["name"]] = arr
    return model, meta.get("extra", {})
