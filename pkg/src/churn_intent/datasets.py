"""Dataset records, loading with confidence filtering, keyword filtering,
model-in-the-loop bootstrap selection, annotator merging, and distribution
statistics.

CSV schema (UTF-8, header required, RFC 4180 quoting):
``id,text,brand,label,confidence,language,medium`` with label in {1,0}.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

logger = logging.getLogger(__name__)

CHURN = "churn"
NON_CHURN = "non_churn"
LABELS = (CHURN, NON_CHURN)
LANGUAGES = ("en", "de")
MEDIA = ("twitter", "chatbot")

REQUIRED_COLUMNS = ("id", "text", "brand", "label", "confidence", "language", "medium")


class DatasetFormatError(ValueError):
    """A dataset file violates the CSV schema."""


@dataclass(frozen=True)
class LabeledExample:
    """One annotated utterance."""

    id: str
    raw_text: str
    source_brand: str | None
    label: str
    confidence: float = 1.0
    language: str = "en"
    medium: str = "twitter"

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}, got {self.language!r}")
        if self.medium not in MEDIA:
            raise ValueError(f"medium must be one of {MEDIA}, got {self.medium!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


def _normalize_label(raw: str, where: str) -> str:
    if raw == "1":
        return CHURN
    if raw == "0":
        return NON_CHURN
    raise DatasetFormatError(f"{where}: invalid label {raw!r} (expected 1 or 0)")


def load_dataset(path: str | Path, min_confidence: float = 0.0) -> list[LabeledExample]:
    """Load examples, dropping (and logging) rows below ``min_confidence``.

    Empty confidence cells default to 1.0, matching annotations that carry
    no explicit confidence score.
    """
    path = Path(path)
    examples: list[LabeledExample] = []
    dropped = 0
    try:
        fh = open(path, encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DatasetFormatError(f"{path}: no such dataset file") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetFormatError(f"{path}: empty file, header row required")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DatasetFormatError(f"{path}: missing required columns {missing}")
        try:
            for row in reader:
                where = f"{path}:{reader.line_num}"
                label = _normalize_label((row["label"] or "").strip(), where)
                conf_raw = (row["confidence"] or "").strip()
                try:
                    confidence = float(conf_raw) if conf_raw else 1.0
                except ValueError:
                    raise DatasetFormatError(
                        f"{where}: invalid confidence {conf_raw!r}"
                    ) from None
                if confidence < min_confidence:
                    dropped += 1
                    continue
                brand = (row["brand"] or "").strip() or None
                try:
                    examples.append(
                        LabeledExample(
                            id=row["id"],
                            raw_text=row["text"],
                            source_brand=brand,
                            label=label,
                            confidence=confidence,
                            language=row["language"].strip(),
                            medium=row["medium"].strip(),
                        )
                    )
                except ValueError as exc:
                    raise DatasetFormatError(f"{where}: {exc}") from None
        except UnicodeDecodeError as exc:
            raise DatasetFormatError(f"{path}: not valid UTF-8: {exc}") from None
    if dropped:
        logger.info("dropped %d rows below confidence %.2f from %s",
                    dropped, min_confidence, path)
    return examples


def save_dataset(examples: Iterable[LabeledExample], path: str | Path) -> int:
    """Write examples back to the CSV schema; returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REQUIRED_COLUMNS)
        for ex in examples:
            writer.writerow([
                ex.id,
                ex.raw_text,
                ex.source_brand or "",
                "1" if ex.label == CHURN else "0",
                repr(ex.confidence) if ex.confidence != 1.0 else "1",
                ex.language,
                ex.medium,
            ])
            count += 1
    return count


class KeywordHit(NamedTuple):
    index: int
    text: str
    matched: tuple[str, ...]


def _normalize_for_matching(text: str) -> str:
    return " ".join(text.casefold().split())


def keyword_filter(corpus: Sequence[str], keywords: Sequence[str]) -> list[KeywordHit]:
    """Retain texts containing any keyword as a case-insensitive substring.

    Keywords are matched against whitespace-collapsed, casefolded text, so
    stems like "anbieter wechs" hit their inflected forms. Each retained
    text is listed once with every keyword that matched.
    """
    keys = [_normalize_for_matching(k) for k in keywords if k.strip()]
    if not keys:
        raise ValueError("keyword list must be nonempty")
    hits: list[KeywordHit] = []
    for i, text in enumerate(corpus):
        normalized = _normalize_for_matching(text)
        matched = tuple(k for k in keys if k in normalized)
        if matched:
            hits.append(KeywordHit(index=i, text=text, matched=matched))
    return hits


class BootstrapCandidate(NamedTuple):
    index: int
    text: str
    churn_probability: float


def bootstrap_select(
    predict_churn_probability: Callable[[Sequence[str]], Sequence[float]],
    corpus: Sequence[str],
    threshold: float = 0.9,
) -> list[BootstrapCandidate]:
    """Texts whose predicted churn probability clears ``threshold``.

    Returned sorted by descending probability. The output is candidate
    material for human annotation, never auto-labeled training data.
    """
    if not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0.5, 1], got {threshold}")
    probs = predict_churn_probability(corpus)
    if len(probs) != len(corpus):
        raise ValueError("predictor returned wrong number of probabilities")
    selected = [
        BootstrapCandidate(index=i, text=t, churn_probability=float(p))
        for i, (t, p) in enumerate(zip(corpus, probs))
        if p >= threshold
    ]
    selected.sort(key=lambda c: (-c.churn_probability, c.index))
    return selected


@dataclass(frozen=True)
class MergeResult:
    examples: list[LabeledExample]
    disagreements: int
    agreement_rate: float


def merge_annotations(
    a: Sequence[LabeledExample], b: Sequence[LabeledExample]
) -> MergeResult:
    """Keep the entries where both annotators agree on the label."""
    by_id_a = {ex.id: ex for ex in a}
    by_id_b = {ex.id: ex for ex in b}
    if set(by_id_a) != set(by_id_b):
        only_a = sorted(set(by_id_a) - set(by_id_b))[:5]
        only_b = sorted(set(by_id_b) - set(by_id_a))[:5]
        raise ValueError(
            f"annotator files cover different ids (e.g. only-a={only_a}, only-b={only_b})"
        )
    kept: list[LabeledExample] = []
    disagreements = 0
    for ex in a:
        other = by_id_b[ex.id]
        if ex.label == other.label:
            kept.append(ex)
        else:
            disagreements += 1
    total = len(by_id_a)
    rate = len(kept) / total if total else 1.0
    if disagreements:
        logger.info("dropped %d disagreements (%.1f%% agreement)", disagreements, 100 * rate)
    return MergeResult(examples=kept, disagreements=disagreements, agreement_rate=rate)


def concat_datasets(*parts: Sequence[LabeledExample]) -> list[LabeledExample]:
    """Concatenate datasets, first occurrence winning on duplicate ids."""
    seen: set[str] = set()
    merged: list[LabeledExample] = []
    duplicates = 0
    for part in parts:
        for ex in part:
            if ex.id in seen:
                duplicates += 1
                continue
            seen.add(ex.id)
            merged.append(ex)
    if duplicates:
        logger.info("skipped %d duplicate ids while concatenating", duplicates)
    return merged


OTHERS = "Others"


@dataclass(frozen=True)
class DatasetStats:
    """Per-brand and per-language churn / non-churn counts."""

    brand_counts: dict[str, tuple[int, int]]
    language_counts: dict[str, tuple[int, int]]
    total: int
    churn_total: int

    @property
    def churn_ratio(self) -> float:
        return self.churn_total / self.total if self.total else 0.0

    def __post_init__(self) -> None:
        spread = sum(c + n for c, n in self.brand_counts.values())
        if spread != self.total:
            raise ValueError(f"brand counts sum to {spread}, dataset size is {self.total}")


def stats(
    dataset: Sequence[LabeledExample],
    top_brands: Sequence[str] | None = None,
) -> DatasetStats:
    """Distribution counts; brands outside ``top_brands`` group as Others.

    Examples without a source brand count under "none" (or Others when a
    top set is given).
    """
    brand_counts: dict[str, list[int]] = {}
    language_counts: dict[str, list[int]] = {}
    top = set(top_brands) if top_brands is not None else None
    churn_total = 0
    for ex in dataset:
        brand = ex.source_brand or "none"
        if top is not None and brand not in top:
            brand = OTHERS
        slot = 0 if ex.label == CHURN else 1
        brand_counts.setdefault(brand, [0, 0])[slot] += 1
        language_counts.setdefault(ex.language, [0, 0])[slot] += 1
        churn_total += 1 - slot
    return DatasetStats(
        brand_counts={b: (c[0], c[1]) for b, c in brand_counts.items()},
        language_counts={l: (c[0], c[1]) for l, c in language_counts.items()},
        total=len(dataset),
        churn_total=churn_total,
    )


def by_language(dataset: Sequence[LabeledExample]) -> dict[str, list[LabeledExample]]:
    out: dict[str, list[LabeledExample]] = {}
    for ex in dataset:
        out.setdefault(ex.language, []).append(ex)
    return out


def relabel(example: LabeledExample, label: str, new_id: str | None = None,
            source_brand: str | None = None) -> LabeledExample:
    """Clone with a new label (used by augmentation)."""
    return replace(
        example,
        label=label,
        id=new_id if new_id is not None else example.id,
        source_brand=source_brand if source_brand is not None else example.source_brand,
    )
