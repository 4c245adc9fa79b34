"""End-to-end churn classifier: dropout on the embedding matrix, a 1-D
convolution bank, a bidirectional GRU, additive attention, and a softmax
head. Training follows mini-batch Adam with a train-loss plateau stop;
inference is a pure function of (params, input).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .checkpoint import CheckpointError, load_container, save_container
from .datasets import CHURN, LABELS, LabeledExample
from .embeddings import WordEmbeddings, lookup
from .metrics import PRF, macro_prf
from .textprep import BrandLexicon, Utterance, preprocess_example, preprocess_text

logger = logging.getLogger(__name__)

LABEL_TO_INDEX = {label: i for i, label in enumerate(LABELS)}


class EmptyUtteranceError(ValueError):
    """Utterance has no tokens left after preprocessing."""


class DimensionMismatchError(ValueError):
    """Embedding dimension does not match the model's input width."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and training hyperparameters (defaults are the reference
    operating point: 256 filters of kernel 2, 128 GRU units, dropout 0.3,
    Adam defaults, batches of 32)."""

    embed_dim: int = 300
    filters: int = 256
    kernel: int = 2
    gru_units: int = 128
    dropout_rate: float = 0.3
    max_len: int | None = None  # computed from the training split when unset
    num_classes: int = 2
    max_epochs: int = 50
    patience: int = 5
    batch_size: int = 32
    learning_rate: float = 0.001
    min_loss_delta: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("embed_dim", "filters", "kernel", "gru_units", "num_classes",
                     "max_epochs", "patience", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.max_len is not None and self.max_len < self.kernel:
            raise ValueError(f"max_len {self.max_len} shorter than kernel {self.kernel}")
        if self.num_classes != 2:
            raise ValueError("binary classifier: num_classes must be 2")


@dataclass
class ModelParams:
    """All trainable arrays plus the config they instantiate."""

    config: ModelConfig
    conv_w: nn.Tensor
    conv_b: nn.Tensor
    gru: nn.BiGRUParams
    attn: nn.AttentionParams
    dense: nn.DenseParams
    seed: int = 0
    best_epoch: int = 0

    def named_tensors(self) -> dict[str, nn.Tensor]:
        out = {"conv.w": self.conv_w, "conv.b": self.conv_b}
        out.update(self.gru.named("gru"))
        out.update(self.attn.named("attn"))
        out.update(self.dense.named("dense"))
        return out

    def trainable(self) -> list[nn.Tensor]:
        return list(self.named_tensors().values())

    def copy(self) -> "ModelParams":
        clone = init_params(self.config, np.random.default_rng(0))
        for name, tensor in clone.named_tensors().items():
            tensor.data = self.named_tensors()[name].data.copy()
        clone.seed = self.seed
        clone.best_epoch = self.best_epoch
        return clone


def init_params(config: ModelConfig, rng: np.random.Generator,
                dtype=np.float32) -> ModelParams:
    """Glorot-uniform matrices, zero biases."""
    m, f, k, h = config.embed_dim, config.filters, config.kernel, config.gru_units
    conv_w = nn.glorot(rng, k * m, f, (f, k, m), dtype)
    conv_b = nn.zeros((f,), dtype)
    gru = nn.BiGRUParams(
        fwd=nn.init_gru_direction(rng, f, h, dtype),
        bwd=nn.init_gru_direction(rng, f, h, dtype),
        hidden=h,
    )
    attn = nn.AttentionParams(
        proj=nn.glorot(rng, 2 * h, h, (2 * h, h), dtype),
        score=nn.glorot(rng, h, 1, (h, 1), dtype),
    )
    dense = nn.DenseParams(
        w=nn.glorot(rng, 2 * h, config.num_classes, (2 * h, config.num_classes), dtype),
        b=nn.zeros((config.num_classes,), dtype),
    )
    return ModelParams(config=config, conv_w=conv_w, conv_b=conv_b,
                       gru=gru, attn=attn, dense=dense, seed=config.seed)


def encode(u: Utterance, emb: WordEmbeddings, config: ModelConfig) -> tuple[np.ndarray, bool]:
    """Token lookup right-padded with zero rows to max_len; longer utterances
    are truncated. Returns (n x m matrix, truncated flag)."""
    if not u.tokens:
        raise EmptyUtteranceError(
            f"utterance {u.raw_text!r} has no tokens after preprocessing"
        )
    if config.max_len is None:
        raise ValueError("config.max_len must be set before encoding")
    if emb.dim != config.embed_dim:
        raise DimensionMismatchError(
            f"embeddings have dim {emb.dim}, model expects {config.embed_dim}"
        )
    tokens = u.tokens
    truncated = len(tokens) > config.max_len
    if truncated:
        tokens = tokens[: config.max_len]
    rows = lookup(emb, tokens)
    out = np.zeros((config.max_len, config.embed_dim), dtype=np.float32)
    out[: len(tokens)] = rows
    return out, truncated


def forward(
    batch: np.ndarray,
    params: ModelParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
    return_attention: bool = False,
):
    """dropout(embeddings) -> conv1d+ReLU -> BiGRU -> attention -> softmax.

    ``batch`` is (B, n, m); returns the (B, 2) probability tensor, plus the
    (B, n-k+1) attention weights when asked.
    """
    x = nn.Tensor(batch)
    x = nn.dropout(x, params.config.dropout_rate, training, rng)
    features = nn.relu(nn.conv1d(x, params.conv_w, params.conv_b))
    states = nn.bigru(features, params.gru)
    context, weights = nn.attention(states, params.attn)
    probs = nn.dense_softmax(context, params.dense.w, params.dense.b)
    if return_attention:
        return probs, weights
    return probs


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    test_scores: dict[str, PRF] = field(default_factory=dict)


def _resolve_embeddings(
    emb: WordEmbeddings | Mapping[str, WordEmbeddings], language: str
) -> WordEmbeddings:
    if isinstance(emb, WordEmbeddings):
        return emb
    try:
        return emb[language]
    except KeyError:
        raise DimensionMismatchError(
            f"no embeddings loaded for language {language!r}"
        ) from None


def _encode_set(
    examples: Sequence[LabeledExample],
    emb: WordEmbeddings | Mapping[str, WordEmbeddings],
    config: ModelConfig,
    lexicon: BrandLexicon | None,
    chatbot_style: bool,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Batch-encode a dataset; empty-after-preprocessing examples are skipped
    with a count so corpus sizes stay auditable."""
    mats, golds, skipped = [], [], 0
    for ex in examples:
        u = preprocess_example(ex, lexicon, chatbot_style)
        if not u.tokens:
            skipped += 1
            continue
        mat, _ = encode(u, _resolve_embeddings(emb, ex.language), config)
        mats.append(mat)
        golds.append(LABEL_TO_INDEX[ex.label])
    if skipped:
        logger.info("skipped %d empty-after-preprocessing examples", skipped)
    if not mats:
        return (np.zeros((0, config.max_len, config.embed_dim), np.float32),
                np.zeros((0,), np.int64), skipped)
    return np.stack(mats), np.asarray(golds, dtype=np.int64), skipped


def _predict_indices(x: np.ndarray, params: ModelParams, chunk: int = 256) -> np.ndarray:
    preds = []
    for start in range(0, len(x), chunk):
        probs = forward(x[start : start + chunk], params, training=False)
        preds.append(np.argmax(probs.data, axis=1))
    return np.concatenate(preds) if preds else np.zeros((0,), dtype=np.int64)


def train(
    train_set: Sequence[LabeledExample],
    test_sets: Mapping[str, Sequence[LabeledExample]] | Sequence[LabeledExample] | None,
    emb: WordEmbeddings | Mapping[str, WordEmbeddings],
    config: ModelConfig,
    lexicon: BrandLexicon | None = None,
    chatbot_style: bool = False,
) -> tuple[ModelParams, list[EpochRecord]]:
    """Mini-batch Adam training with per-epoch macro-F1 on each test set.

    Returns the parameters of the best epoch (mean macro-F1 across test
    sets) and the full history. Training stops at max_epochs or after
    ``patience`` epochs whose train-loss improvement stays under
    ``min_loss_delta``. Augmentation, when wanted, must already be applied
    to the train set (and only there).
    """
    if not train_set:
        raise ValueError("empty training set")
    if test_sets is None:
        test_sets = {}
    elif not isinstance(test_sets, Mapping):
        test_sets = {"test": test_sets}

    rng = np.random.default_rng(config.seed)
    if config.max_len is None:
        lengths = [
            len(preprocess_example(ex, lexicon, chatbot_style).tokens) for ex in train_set
        ]
        max_len = max(max(lengths, default=0), config.kernel)
        config = replace(config, max_len=max_len)

    x_train, y_train, _ = _encode_set(train_set, emb, config, lexicon, chatbot_style)
    if len(x_train) == 0:
        raise ValueError("training set empty after preprocessing")
    encoded_tests = {
        name: _encode_set(examples, emb, config, lexicon, chatbot_style)[:2]
        for name, examples in test_sets.items()
    }

    params = init_params(config, rng)
    optimizer = nn.Adam(params.trainable(), lr=config.learning_rate)
    history: list[EpochRecord] = []
    best_params = params.copy()
    best_score = -np.inf
    prev_loss = np.inf
    plateau = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(len(x_train))
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            probs = forward(x_train[idx], params, training=True, rng=rng)
            loss = nn.cross_entropy(probs, y_train[idx])
            if not np.isfinite(loss.data):
                raise ArithmeticError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss.data) * len(idx)
        train_loss = total_loss / len(x_train)

        scores: dict[str, PRF] = {}
        for name, (x_test, y_test) in encoded_tests.items():
            if len(x_test) == 0:
                continue
            preds = _predict_indices(x_test, params)
            scores[name] = macro_prf(preds.tolist(), y_test.tolist())
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, test_scores=scores))

        epoch_score = (
            float(np.mean([s.f1 for s in scores.values()])) if scores else -train_loss
        )
        if epoch_score > best_score:
            best_score = epoch_score
            best_params = params.copy()
            best_params.best_epoch = epoch

        if prev_loss - train_loss < config.min_loss_delta:
            plateau += 1
            if plateau >= config.patience:
                break
        else:
            plateau = 0
        prev_loss = train_loss

    return best_params, history


@dataclass(frozen=True)
class Prediction:
    label: str
    confidence: float
    attention_weights: np.ndarray | None = None
    truncated: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def churn_probability(self) -> float:
        return self.confidence if self.label == CHURN else 1.0 - self.confidence


def predict(
    inputs: Sequence[str | LabeledExample],
    params: ModelParams,
    emb: WordEmbeddings | Mapping[str, WordEmbeddings],
    lexicon: BrandLexicon | None = None,
    medium: str = "chatbot",
    language: str = "en",
    chatbot_style: bool = False,
) -> list[Prediction]:
    """Full preprocessing (normalize, mask or strip per medium) followed by an
    inference-mode forward pass. Deterministic for fixed params."""
    if not inputs:
        return []
    config = params.config
    mats, metas = [], []
    for item in inputs:
        if isinstance(item, LabeledExample):
            u = preprocess_example(item, lexicon, chatbot_style)
        else:
            u = preprocess_text(item, language=language, medium=medium,
                                lexicon=lexicon, chatbot_style=chatbot_style)
        mat, truncated = encode(u, _resolve_embeddings(
            emb, u.language), config)
        mats.append(mat)
        # number of conv windows that touch real tokens
        effective = max(1, min(len(u.tokens), config.max_len) - config.kernel + 1)
        metas.append((truncated, effective))

    batch = np.stack(mats)
    probs_t, weights_t = forward(batch, params, training=False, return_attention=True)
    probs = probs_t.data
    weights = weights_t.data
    out = []
    for i, (truncated, effective) in enumerate(metas):
        idx = int(np.argmax(probs[i]))
        out.append(Prediction(
            label=LABELS[idx],
            confidence=float(probs[i, idx]),
            attention_weights=weights[i, :effective].copy(),
            truncated=truncated,
        ))
    return out


def churn_probabilities(
    texts: Sequence[str],
    params: ModelParams,
    emb: WordEmbeddings | Mapping[str, WordEmbeddings],
    lexicon: BrandLexicon | None = None,
    medium: str = "twitter",
    language: str = "en",
) -> list[float]:
    """Predicted-churn probability per text (bootstrap selection hook)."""
    preds = predict(texts, params, emb, lexicon, medium=medium, language=language)
    return [p.churn_probability for p in preds]


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    arrays = {name: t.data for name, t in params.named_tensors().items()}
    save_container(
        path,
        kind="model",
        config={
            "model": asdict(params.config),
            "seed": params.seed,
            "best_epoch": params.best_epoch,
        },
        arrays=arrays,
    )


def load_checkpoint(path: str | Path) -> ModelParams:
    """Rebuild ModelParams; array shapes are validated against the config."""
    _, config_blob, arrays = load_container(path, expect_kind="model")
    config = ModelConfig(**config_blob["model"])
    params = init_params(config, np.random.default_rng(0))
    for name, tensor in params.named_tensors().items():
        if name not in arrays:
            raise CheckpointError(f"{path}: checkpoint missing array {name!r}")
        if arrays[name].shape != tensor.data.shape:
            raise CheckpointError(
                f"{path}: array {name!r} has shape {arrays[name].shape}, "
                f"config implies {tensor.data.shape}"
            )
        tensor.data = arrays[name]
    params.seed = config_blob.get("seed", 0)
    params.best_epoch = config_blob.get("best_epoch", 0)
    return params
