"""Offline source-to-target embedding alignment.

The linear map is the closed-form orthogonal Procrustes solution computed
from the SVD of the d x d cross-covariance of paired dictionary vectors.
Dimension reduction keeps the leading singular components (those with
singular value >= threshold) and projects *both* languages onto them, so the
two vocabularies end up in one shared space. All fitting math runs in double
precision; stored embeddings stay float32.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .checkpoint import load_container, save_container
from .embeddings import WordEmbeddings

logger = logging.getLogger(__name__)


class AlignmentError(ValueError):
    """Fitting or application failure (empty dictionary, shape mismatch...)."""


@dataclass(frozen=True)
class BilingualDictionary:
    """Ordered translation pairs with a train/test index split."""

    pairs: tuple[tuple[str, str], ...]
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("dictionary contains duplicate pairs")
        train, test = set(self.train_indices), set(self.test_indices)
        if train & test:
            raise ValueError("train and test splits overlap")
        if train | test != set(range(len(self.pairs))):
            raise ValueError("train and test splits do not cover all pairs")

    @classmethod
    def from_pairs(
        cls,
        pairs: list[tuple[str, str]],
        test_fraction: float = 0.1,
        seed: int = 0,
    ) -> "BilingualDictionary":
        """Deterministic seeded shuffle into train/test splits."""
        unique = list(dict.fromkeys(pairs))
        if len(unique) != len(pairs):
            logger.info("dropped %d duplicate dictionary pairs", len(pairs) - len(unique))
        order = list(range(len(unique)))
        random.Random(seed).shuffle(order)
        n_test = int(round(len(unique) * test_fraction))
        test = tuple(sorted(order[:n_test]))
        train = tuple(sorted(order[n_test:]))
        return cls(pairs=tuple(unique), train_indices=train, test_indices=test)

    def split(self, name: str) -> list[tuple[str, str]]:
        if name == "train":
            idx = self.train_indices
        elif name == "test":
            idx = self.test_indices
        else:
            raise ValueError(f"unknown split {name!r}")
        return [self.pairs[i] for i in idx]


def load_dictionary(
    path: str | Path, test_fraction: float = 0.1, seed: int = 0
) -> BilingualDictionary:
    """Read '<source><TAB><target>' pairs and split them."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise AlignmentError(f"{path}:{lineno}: expected '<source>\\t<target>'")
            src, tgt = line.split("\t", 1)
            pairs.append((src, tgt))
    if not pairs:
        raise AlignmentError(f"{path}: empty dictionary")
    return BilingualDictionary.from_pairs(pairs, test_fraction=test_fraction, seed=seed)


@dataclass(frozen=True)
class AlignmentTransform:
    """Source-to-target map with its singular spectrum and truncation point.

    Internally carries the full SVD factors so the retained rank can be
    recomputed for any threshold. At full rank the map is the orthogonal
    Procrustes solution and the target side is untouched; below full rank
    both languages are projected onto the retained target-side components.
    """

    u: np.ndarray = field(repr=False)  # d x d, left singular vectors
    vt: np.ndarray = field(repr=False)  # d x d, right singular vectors (rows)
    singular_values: np.ndarray = field(repr=False)  # length d, nonincreasing
    threshold: float
    source_language: str
    target_language: str

    def __post_init__(self) -> None:
        sv = self.singular_values
        if np.any(sv < 0) or np.any(np.diff(sv) > 1e-9):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        if self.rank == 0:
            raise AlignmentError(
                f"threshold {self.threshold} removes every component "
                f"(max singular value {sv[0] if len(sv) else 'n/a'})"
            )

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.singular_values >= self.threshold))

    @property
    def w(self) -> np.ndarray:
        """The r x d source map (rows of the full map beyond rank r deleted)."""
        if self.rank == self.dim:
            return (self.u @ self.vt).T
        return self.u[:, : self.rank].T.copy()

    @property
    def target_projection(self) -> np.ndarray | None:
        """r x d target-side map; None means identity (full rank)."""
        if self.rank == self.dim:
            return None
        return self.vt[: self.rank].copy()


class DictionaryMatrices(NamedTuple):
    x: np.ndarray  # p x d source vectors
    y: np.ndarray  # p x d target vectors
    dropped: int  # pairs skipped because a side was out of vocabulary


def build_dictionary_matrices(
    dictionary: BilingualDictionary,
    split: str,
    src: WordEmbeddings,
    tgt: WordEmbeddings,
) -> DictionaryMatrices:
    """Row-stack the vectors of dictionary pairs present in both vocabularies."""
    if not (src.normalized and tgt.normalized):
        raise AlignmentError("both embeddings must be row-normalized before fitting")
    if src.dim != tgt.dim:
        raise AlignmentError(f"embedding dims differ: {src.dim} vs {tgt.dim}")
    xs, ys, dropped = [], [], 0
    for s_word, t_word in dictionary.split(split):
        if s_word in src and t_word in tgt:
            xs.append(src.vector(s_word))
            ys.append(tgt.vector(t_word))
        else:
            dropped += 1
    if not xs:
        raise AlignmentError(f"no {split} dictionary pairs found in both vocabularies")
    if dropped:
        logger.info("dropped %d/%d %s pairs with out-of-vocab words",
                    dropped, dropped + len(xs), split)
    return DictionaryMatrices(
        x=np.asarray(xs, dtype=np.float64),
        y=np.asarray(ys, dtype=np.float64),
        dropped=dropped,
    )


def fit_alignment(
    x: np.ndarray,
    y: np.ndarray,
    threshold: float = 0.0,
    source_language: str = "de",
    target_language: str = "en",
) -> AlignmentTransform:
    """SVD of the cross-covariance x.T @ y; the full-rank map is V @ U.T.

    Components with singular value below ``threshold`` are deleted as in
    :func:`reduce_dimensions` (threshold 0 keeps everything).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise AlignmentError(f"dictionary matrices differ in shape: {x.shape} vs {y.shape}")
    if x.ndim != 2 or x.shape[0] == 0:
        raise AlignmentError("dictionary matrices must be nonempty p x d arrays")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise AlignmentError("dictionary matrices contain non-finite values")
    p, d = x.shape
    if p < d:
        logger.warning("only %d dictionary pairs for dim %d; fit may be unstable", p, d)
    u, sv, vt = np.linalg.svd(x.T @ y)
    return AlignmentTransform(
        u=u,
        vt=vt,
        singular_values=sv,
        threshold=float(threshold),
        source_language=source_language,
        target_language=target_language,
    )


def reduce_dimensions(t: AlignmentTransform, threshold: float) -> AlignmentTransform:
    """Keep the leading components with singular value >= threshold."""
    if threshold <= 0:
        raise AlignmentError("threshold must be positive")
    return AlignmentTransform(
        u=t.u,
        vt=t.vt,
        singular_values=t.singular_values,
        threshold=float(threshold),
        source_language=t.source_language,
        target_language=t.target_language,
    )


def apply_alignment(t: AlignmentTransform, emb: WordEmbeddings) -> WordEmbeddings:
    """Map an embedding matrix into the shared space.

    Source-language rows go through the fitted map; target-language rows are
    projected onto the retained components (identity at full rank).
    """
    if emb.dim != t.dim:
        raise AlignmentError(f"embedding dim {emb.dim} does not match transform dim {t.dim}")
    if emb.language == t.source_language:
        mapping = t.w
    elif emb.language == t.target_language:
        mapping = t.target_projection
        if mapping is None:
            return emb
    else:
        raise AlignmentError(
            f"embedding language {emb.language!r} is neither source "
            f"{t.source_language!r} nor target {t.target_language!r}"
        )
    projected = emb.matrix.astype(np.float64) @ mapping.T
    full_rank = t.rank == t.dim
    return WordEmbeddings(
        language=emb.language,
        dim=t.rank,
        vocab=emb.vocab,
        matrix=projected.astype(np.float32),
        normalized=emb.normalized and full_rank,
    )


def _cosine_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    return matrix / np.where(norms == 0.0, 1.0, norms)[:, None]


def _joint_matrices(
    t: AlignmentTransform, src_emb: WordEmbeddings, tgt_emb: WordEmbeddings
) -> tuple[np.ndarray, np.ndarray]:
    src = src_emb.matrix.astype(np.float64) @ t.w.T
    proj = t.target_projection
    tgt = tgt_emb.matrix.astype(np.float64)
    if proj is not None:
        tgt = tgt @ proj.T
    return src, tgt


def translate(
    t: AlignmentTransform,
    src_emb: WordEmbeddings,
    tgt_emb: WordEmbeddings,
    word: str,
    k: int = 1,
) -> list[str]:
    """Top-k target words by cosine against the aligned source vector.

    Ties break toward the smaller vocabulary index; k larger than the target
    vocabulary returns every word, ranked.
    """
    if word not in src_emb:
        raise AlignmentError(f"word {word!r} not in source vocabulary")
    src_all, tgt_all = _joint_matrices(t, src_emb, tgt_emb)
    query = _cosine_rows(src_all[src_emb.vocab[word]][None, :])[0]
    sims = _cosine_rows(tgt_all) @ query
    order = np.argsort(-sims, kind="stable")[: max(0, k)]
    words = tgt_emb.words
    return [words[i] for i in order]


def evaluate_alignment(
    t: AlignmentTransform,
    dictionary: BilingualDictionary,
    split: str,
    src_emb: WordEmbeddings,
    tgt_emb: WordEmbeddings,
    k: int = 1,
) -> float:
    """precision@k of gold translations over the given dictionary split.

    Pairs with an out-of-vocabulary side are skipped (and logged), matching
    the fit-side drop rule.
    """
    pairs = dictionary.split(split)
    if not pairs:
        raise AlignmentError(f"empty {split} split")
    usable = [(s, w) for s, w in pairs if s in src_emb and w in tgt_emb]
    if not usable:
        raise AlignmentError(f"no evaluable {split} pairs (all out of vocabulary)")
    if len(usable) < len(pairs):
        logger.info("skipping %d/%d %s pairs with out-of-vocab words",
                    len(pairs) - len(usable), len(pairs), split)
    src_all, tgt_all = _joint_matrices(t, src_emb, tgt_emb)
    tgt_norm = _cosine_rows(tgt_all)
    queries = _cosine_rows(np.asarray([src_all[src_emb.vocab[s]] for s, _ in usable]))
    sims = queries @ tgt_norm.T  # n_pairs x |tgt vocab|
    hits = 0
    kk = min(max(1, k), tgt_norm.shape[0])
    for row, (_, gold) in zip(sims, usable):
        top = np.argsort(-row, kind="stable")[:kk]
        if tgt_emb.vocab[gold] in top:
            hits += 1
    return hits / len(usable)


def save_transform(t: AlignmentTransform, path: str | Path) -> None:
    """Persist in the versioned container format (float32 arrays).

    ``w`` is stored for inspection; loading recomputes it from the factors.
    """
    save_container(
        path,
        kind="alignment",
        config={
            "threshold": t.threshold,
            "source_language": t.source_language,
            "target_language": t.target_language,
        },
        arrays={"u": t.u, "vt": t.vt, "singular_values": t.singular_values, "w": t.w},
    )


def load_transform(path: str | Path) -> AlignmentTransform:
    _, config, arrays = load_container(path, expect_kind="alignment")
    sv = arrays["singular_values"].astype(np.float64)
    # float32 storage can leave microscopic ordering violations; re-sort defensively
    sv = np.sort(sv)[::-1].copy()
    return AlignmentTransform(
        u=arrays["u"].astype(np.float64),
        vt=arrays["vt"].astype(np.float64),
        singular_values=sv,
        threshold=float(config["threshold"]),
        source_language=config["source_language"],
        target_language=config["target_language"],
    )
