"""Blind-TAN-lite: a trainable query-only moment localizer.

The video-feature map of a 2D proposal-map localizer is replaced by a
learnable prior map of shape (N, N, d); cell (i, j) stands for the candidate
moment [i/N, (j+1)/N] in normalized time. A query embedding (mean-pooled
learnable token vectors, projected to d channels) is fused with the prior map
by Hadamard product, a small same-padded conv stack turns the fused map into
a score map, and a sigmoid squashes scores into (0, 1). Supervision is
binary cross-entropy against scaled-IoU targets; training is plain SGD with
hand-derived gradients in float64, so analytic gradients can be checked
against central finite differences.

Mean pooling makes the encoder order-insensitive: permuting query words
yields the same vector. This is a known fidelity gap versus a recurrent
encoder and the price of zero external dependencies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import Corpus, Moment, QuerySample
from .baselines import RankedPrediction
from .lexicon import tokenize

CHECKPOINT_VERSION = 1
UNK_ID = 0


class BlindTanError(RuntimeError):
    """Configuration or training failure."""


@dataclass(frozen=True)
class BlindTanConfig:
    """Hyperparameters; defaults are desk-scale so training runs in minutes."""

    map_size: int = 64        # sampling points per axis; cells are (start, end) index pairs
    channels: int = 32        # prior-map channels
    vocab_size: int = 2000    # including the reserved UNK id 0
    embed_dim: int = 32
    conv_layers: int = 2
    kernel_size: int = 5      # odd, for symmetric same-padding
    learning_rate: float = 0.5
    epochs: int = 5
    iou_scale_min: float = 0.5
    iou_scale_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.map_size < 2:
            raise BlindTanError(f"map_size must be >= 2, got {self.map_size}")
        if self.channels < 1 or self.embed_dim < 1 or self.vocab_size < 2:
            raise BlindTanError("channels, embed_dim >= 1 and vocab_size >= 2 required")
        if self.conv_layers < 1:
            raise BlindTanError("conv_layers must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise BlindTanError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if not (0 <= self.iou_scale_min < self.iou_scale_max <= 1):
            raise BlindTanError(
                f"need 0 <= iou_scale_min < iou_scale_max <= 1, got "
                f"({self.iou_scale_min}, {self.iou_scale_max})"
            )
        if self.learning_rate <= 0 or self.epochs < 0:
            raise BlindTanError("learning_rate must be positive and epochs >= 0")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BlindTanConfig":
        return cls(**json.loads(text))


@dataclass
class BlindTanModel:
    """Learnable parameters plus the vocabulary and validity mask."""

    config: BlindTanConfig
    vocab: dict[str, int]                 # token -> id; id 0 is UNK
    prior_map: np.ndarray                 # (N, N, d)
    token_embeddings: np.ndarray          # (vocab_size, embed_dim)
    query_projection: np.ndarray          # (embed_dim, d)
    conv_weights: list[np.ndarray]        # each (k*k*c_in, c_out)
    conv_biases: list[np.ndarray]         # each (c_out,)
    valid_mask: np.ndarray = field(init=False)  # (N, N) bool, start idx <= end idx
    training_log: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        n = self.config.map_size
        self.valid_mask = np.triu(np.ones((n, n), dtype=bool))

    def parameters(self) -> dict[str, np.ndarray]:
        """Live views of every learnable array, keyed by group name."""
        params = {
            "prior_map": self.prior_map,
            "token_embeddings": self.token_embeddings,
            "query_projection": self.query_projection,
        }
        for i, (w, b) in enumerate(zip(self.conv_weights, self.conv_biases)):
            params[f"conv_w{i}"] = w
            params[f"conv_b{i}"] = b
        return params


def build_vocab(corpus: Corpus, vocab_size: int, min_count: int = 1) -> dict[str, int]:
    """Frequency-ranked vocabulary with id 0 reserved for UNK.

    Tokens below min_count or beyond the vocab_size cap map to UNK.
    """
    counts: dict[str, int] = {}
    for sample in corpus:
        for token in tokenize(sample.query):
            counts[token] = counts.get(token, 0) + 1
    ranked = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    return {token: i + 1 for i, token in enumerate(ranked[: vocab_size - 1])}


def init_model(config: BlindTanConfig, vocab: dict[str, int]) -> BlindTanModel:
    """Randomly initialize all parameter groups from the config seed."""
    rng = np.random.default_rng(config.seed)
    n, d, k = config.map_size, config.channels, config.kernel_size
    prior_map = rng.standard_normal((n, n, d))
    embeddings = rng.standard_normal((config.vocab_size, config.embed_dim)) * 0.1
    projection = rng.standard_normal((config.embed_dim, d)) / np.sqrt(config.embed_dim)
    conv_w, conv_b = [], []
    c_in = d
    for layer in range(config.conv_layers):
        c_out = 1 if layer == config.conv_layers - 1 else d
        scale = np.sqrt(2.0 / (k * k * c_in))
        conv_w.append(rng.standard_normal((k * k * c_in, c_out)) * scale)
        conv_b.append(np.zeros(c_out))
        c_in = c_out
    return BlindTanModel(config, dict(vocab), prior_map, embeddings, projection, conv_w, conv_b)


def query_token_ids(model: BlindTanModel, query: str) -> list[int]:
    """Token ids for a query; OOV tokens map to UNK, empty queries to [UNK]."""
    ids = [model.vocab.get(t, UNK_ID) for t in tokenize(query)]
    return ids if ids else [UNK_ID]


def encode_query(model: BlindTanModel, query: str) -> np.ndarray:
    """Mean of token embeddings projected to the prior-map channel space."""
    ids = query_token_ids(model, query)
    emb = model.token_embeddings[ids].mean(axis=0)
    return emb @ model.query_projection


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(H, W, C) -> (H*W, k*k*C) patches under symmetric same-padding."""
    h, w, c = x.shape
    pad = k // 2
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    windows = sliding_window_view(xp, (k, k), axis=(0, 1))  # (H, W, C, k, k)
    return windows.transpose(0, 1, 3, 4, 2).reshape(h * w, k * k * c)


def _col2im(dcols: np.ndarray, h: int, w: int, c: int, k: int) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back to (H, W, C)."""
    pad = k // 2
    dxp = np.zeros((h + 2 * pad, w + 2 * pad, c))
    dcols = dcols.reshape(h, w, k, k, c)
    for di in range(k):
        for dj in range(k):
            dxp[di : di + h, dj : dj + w, :] += dcols[:, :, di, dj, :]
    return dxp[pad : pad + h, pad : pad + w, :]


def _forward(model: BlindTanModel, token_ids: list[int]):
    """Run the full forward pass, returning final logits and caches for backprop."""
    cfg = model.config
    n, k = cfg.map_size, cfg.kernel_size
    emb = model.token_embeddings[token_ids].mean(axis=0)
    q = emb @ model.query_projection
    fused = model.prior_map * q
    x = fused
    caches = []
    for layer, (w, b) in enumerate(zip(model.conv_weights, model.conv_biases)):
        cols = _im2col(x, k)
        z = (cols @ w + b).reshape(n, n, -1)
        caches.append((cols, z, x.shape[2]))
        x = np.maximum(z, 0.0) if layer < cfg.conv_layers - 1 else z
    logits = x[:, :, 0]
    return logits, emb, q, caches


def score_map(model: BlindTanModel, query_vec: np.ndarray) -> np.ndarray:
    """Sigmoid score map for a pre-encoded query; masked cells are set to 0.

    The fused map is prior_map * query_vec (Hadamard over channels); the conv
    stack uses same-padding with ReLU between layers and a sigmoid on the
    final single-channel output.
    """
    cfg = model.config
    n, k = cfg.map_size, cfg.kernel_size
    x = model.prior_map * query_vec
    for layer, (w, b) in enumerate(zip(model.conv_weights, model.conv_biases)):
        z = (_im2col(x, k) @ w + b).reshape(n, n, -1)
        x = np.maximum(z, 0.0) if layer < cfg.conv_layers - 1 else z
    return np.where(model.valid_mask, _sigmoid(x[:, :, 0]), 0.0)


def cell_moments(map_size: int, video_duration: float = 1.0):
    """Start and end times of every cell: cell (i, j) spans [i/N, (j+1)/N].

    This left-closed mapping covers the whole [0, 1] range with N^2 cells and
    is shared between training supervision and prediction.
    """
    starts = np.arange(map_size) / map_size * video_duration
    ends = (np.arange(map_size) + 1) / map_size * video_duration
    return starts, ends


def scaled_iou_targets(model_or_config, sample: QuerySample) -> np.ndarray:
    """Supervision map: IoU of each cell with the ground truth, rescaled.

    y = clamp((IoU - t_min) / (t_max - t_min), 0, 1), computed in normalized
    time (IoU is scale-invariant, so seconds and fractions agree).
    """
    cfg = model_or_config.config if isinstance(model_or_config, BlindTanModel) else model_or_config
    n = cfg.map_size
    starts, ends = cell_moments(n)
    gs = sample.ground_truth.start / sample.video_duration
    ge = sample.ground_truth.end / sample.video_duration
    inter = np.minimum(ends[None, :], ge) - np.maximum(starts[:, None], gs)
    inter = np.maximum(inter, 0.0)
    union = (ends[None, :] - starts[:, None]) + (ge - gs) - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(union > 0, inter / union, 0.0)
    return np.clip((iou - cfg.iou_scale_min) / (cfg.iou_scale_max - cfg.iou_scale_min), 0.0, 1.0)


def _bce_from_logits(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> float:
    z = logits[mask]
    y = targets[mask]
    # -(y log s + (1-y) log(1-s)) == softplus(z) - y z
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(softplus - y * z))


def loss_value(model: BlindTanModel, token_ids: list[int], targets: np.ndarray) -> float:
    """Mean BCE over valid cells, computed from logits for numerical stability."""
    logits, _, _, _ = _forward(model, token_ids)
    return _bce_from_logits(logits, targets, model.valid_mask)


def loss_and_gradients(
    model: BlindTanModel, token_ids: list[int], targets: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus hand-derived gradients for every parameter group."""
    cfg = model.config
    n, k = cfg.map_size, cfg.kernel_size
    logits, emb, q, caches = _forward(model, token_ids)
    mask = model.valid_mask
    count = int(mask.sum())
    z = logits[mask]
    y = targets[mask]
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    loss = float(np.mean(softplus - y * z))

    dz = np.where(mask, (_sigmoid(logits) - targets) / count, 0.0)[:, :, None]

    grads: dict[str, np.ndarray] = {}
    dx = dz
    for layer in range(cfg.conv_layers - 1, -1, -1):
        cols, z_pre, c_in = caches[layer]
        if layer < cfg.conv_layers - 1:
            dx = dx * (z_pre > 0)
        dz_flat = dx.reshape(n * n, -1)
        grads[f"conv_w{layer}"] = cols.T @ dz_flat
        grads[f"conv_b{layer}"] = dz_flat.sum(axis=0)
        dcols = dz_flat @ model.conv_weights[layer].T
        dx = _col2im(dcols, n, n, c_in, k)

    dfused = dx
    grads["prior_map"] = dfused * q
    dq = (dfused * model.prior_map).sum(axis=(0, 1))
    grads["query_projection"] = np.outer(emb, dq)
    demb = model.query_projection @ dq
    dE = np.zeros_like(model.token_embeddings)
    np.add.at(dE, token_ids, demb / len(token_ids))
    grads["token_embeddings"] = dE
    return loss, grads


def mean_corpus_loss(model: BlindTanModel, corpus: Corpus) -> float:
    """Full-corpus mean loss; identical queries share one forward pass."""
    logit_cache: dict[tuple[int, ...], np.ndarray] = {}
    total = 0.0
    for sample in corpus:
        ids = tuple(query_token_ids(model, sample.query))
        if ids not in logit_cache:
            logit_cache[ids] = _forward(model, list(ids))[0]
        total += _bce_from_logits(
            logit_cache[ids], scaled_iou_targets(model.config, sample), model.valid_mask
        )
    return total / len(corpus)


def train(config: BlindTanConfig, corpus: Corpus, log_path=None) -> BlindTanModel:
    """Train from scratch with per-sample SGD; deterministic given the seed.

    The full-training-set loss is evaluated after every epoch (epoch 0 is the
    initial loss) and recorded in model.training_log; `log_path` additionally
    writes an `epoch,loss` CSV.
    """
    if len(corpus) == 0:
        raise BlindTanError("cannot train on an empty corpus")
    vocab = build_vocab(corpus, config.vocab_size)
    model = init_model(config, vocab)
    rng = np.random.default_rng(config.seed + 1)

    token_lists = [query_token_ids(model, s.query) for s in corpus]
    target_maps = [scaled_iou_targets(config, s) for s in corpus]

    log = [(0, mean_corpus_loss(model, corpus))]
    params = model.parameters()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(corpus))
        for step, idx in enumerate(order):
            loss, grads = loss_and_gradients(model, token_lists[idx], target_maps[idx])
            if not np.isfinite(loss):
                raise BlindTanError(
                    f"non-finite loss at epoch {epoch}, step {step} "
                    f"(sample {corpus.samples[idx].sample_id!r})"
                )
            for name, grad in grads.items():
                params[name] -= config.learning_rate * grad
        log.append((epoch, mean_corpus_loss(model, corpus)))
    model.training_log = log
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write("epoch,loss\n")
            for epoch, loss in log:
                fh.write(f"{epoch},{loss!r}\n")
    return model


def predict(model: BlindTanModel, sample: QuerySample, k: int = 1) -> RankedPrediction:
    """Top-k valid cells by score, ties broken by (start index, end index).

    Depends only on (query, video_duration, k): the video id and any visual
    content never enter the computation. No non-maximum suppression is
    applied; overlapping cells may appear in the ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = score_map(model, encode_query(model, sample.query))
    ii, jj = np.nonzero(model.valid_mask)
    vals = scores[ii, jj]
    order = np.lexsort((jj, ii, -vals))[: min(k, len(vals))]
    n = model.config.map_size
    d = sample.video_duration
    moments = tuple(
        Moment(ii[o] / n * d, (jj[o] + 1) / n * d) for o in order
    )
    return RankedPrediction(sample.sample_id, moments, vals[order])


def save_model(model: BlindTanModel, path) -> None:
    """Write a versioned checkpoint: config header, vocabulary, parameter arrays."""
    arrays = {
        "prior_map": model.prior_map,
        "token_embeddings": model.token_embeddings,
        "query_projection": model.query_projection,
    }
    for i, (w, b) in enumerate(zip(model.conv_weights, model.conv_biases)):
        arrays[f"conv_w{i}"] = w
        arrays[f"conv_b{i}"] = b
    np.savez(
        path,
        version=np.array([CHECKPOINT_VERSION]),
        config=np.array(model.config.to_json()),
        vocab=np.array(json.dumps(model.vocab, sort_keys=True)),
        **arrays,
    )


def load_model(path) -> BlindTanModel:
    """Read a checkpoint written by save_model."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"][0])
        if version != CHECKPOINT_VERSION:
            raise BlindTanError(f"unsupported checkpoint version {version}")
        config = BlindTanConfig.from_json(str(data["config"]))
        vocab = {str(k): int(v) for k, v in json.loads(str(data["vocab"])).items()}
        conv_w = [data[f"conv_w{i}"] for i in range(config.conv_layers)]
        conv_b = [data[f"conv_b{i}"] for i in range(config.conv_layers)]
        return BlindTanModel(
            config,
            vocab,
            data["prior_map"],
            data["token_embeddings"],
            data["query_projection"],
            conv_w,
            conv_b,
        )
