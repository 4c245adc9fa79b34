"""Per-language word vectors: loading, row normalization, and token lookup.

Vectors are stored in float32; callers that need double precision (the
alignment fit) upcast on their side. Instances are immutable after load and
safe to share across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    """A vector file does not follow the '<count> <dim>' text format."""


@dataclass(frozen=True)
class WordEmbeddings:
    """Fixed-width vectors for one language.

    ``vocab`` maps each word to its dense row index in ``matrix``
    (indices 0..len(vocab)-1, one row per word).
    """

    language: str
    dim: int
    vocab: dict[str, int] = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2 or self.matrix.shape != (len(self.vocab), self.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} inconsistent with "
                f"{len(self.vocab)} words of dim {self.dim}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("embedding matrix contains non-finite values")
        indices = sorted(self.vocab.values())
        if indices != list(range(len(self.vocab))):
            raise ValueError("vocabulary indices are not dense 0..N-1")
        if self.normalized and len(self.matrix):
            norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
            off = np.abs(norms[norms > 0] - 1.0)
            if off.size and off.max() > 1e-6:
                raise ValueError(
                    f"normalized flag set but a row norm is off by {off.max():.2e}"
                )

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab[word]]

    @property
    def words(self) -> list[str]:
        """Words in row order."""
        out = [""] * len(self.vocab)
        for w, i in self.vocab.items():
            out[i] = w
        return out


def load_embeddings(
    path: str | Path,
    max_words: int | None = None,
    language: str = "xx",
) -> WordEmbeddings:
    """Load a whitespace text vector file: header '<count> <dim>', then
    '<word> <v1> ... <vdim>' per line.

    At most ``max_words`` entries are kept; on duplicate words the first
    occurrence wins. Malformed lines fail loudly with their line number.
    """
    path = Path(path)
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(
                f"{path}:1: malformed header {header.strip()!r}, expected '<count> <dim>'"
            )
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(
                f"{path}:1: non-numeric header {header.strip()!r}"
            ) from None
        if count < 0 or dim <= 0:
            raise EmbeddingFormatError(f"{path}:1: invalid header counts {count} {dim}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            # fastText files may carry a trailing space before the newline
            if fields and fields[-1] == "":
                fields = fields[:-1]
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim + 1} fields, got {len(fields)}"
                )
            word = fields[0]
            try:
                vec = np.array(fields[1:], dtype=np.float32)
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: non-numeric vector component"
                ) from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"{path}:{lineno}: non-finite vector component")
            if word in vocab:
                continue
            if max_words is not None and len(vocab) >= max_words:
                break
            vocab[word] = len(rows)
            rows.append(vec)
    matrix = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), np.float32)
    emb = WordEmbeddings(language=language, dim=dim, vocab=vocab, matrix=matrix)
    logger.info("loaded %d/%d vectors of dim %d from %s", len(vocab), count, dim, path)
    return emb


def normalize_rows(emb: WordEmbeddings) -> WordEmbeddings:
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero.

    Idempotent: normalizing an already-normalized instance returns it as is.
    """
    if emb.normalized:
        return emb
    norms = np.linalg.norm(emb.matrix.astype(np.float64), axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    matrix = (emb.matrix / safe[:, None]).astype(np.float32)
    return WordEmbeddings(
        language=emb.language, dim=emb.dim, vocab=emb.vocab, matrix=matrix, normalized=True
    )


def lookup(emb: WordEmbeddings, tokens: list[str]) -> np.ndarray:
    """One row per token, out-of-vocabulary tokens mapping to zeros."""
    out = np.zeros((len(tokens), emb.dim), dtype=np.float32)
    for i, tok in enumerate(tokens):
        idx = emb.vocab.get(tok)
        if idx is not None:
            out[i] = emb.matrix[idx]
    return out


def save_embeddings(emb: WordEmbeddings, path: str | Path) -> None:
    """Write back in the text vector format (used by fixtures and scripts)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for word in emb.words:
            vec = " ".join(repr(float(v)) for v in emb.vector(word))
            fh.write(f"{word} {vec}\n")
