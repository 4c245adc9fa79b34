"""Tokenization, Twitter-specific normalization, brand masking, source-brand
stripping for chatbot-style text, and label-aware augmentation.

All operations are pure: they return new token lists / utterances and never
mutate their inputs, so they are safe to parallelize across examples.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .datasets import NON_CHURN, LabeledExample, relabel

logger = logging.getLogger(__name__)

TARGET_TOKEN = "target"
COMPETITOR_TOKEN = "competitor"
URL_TOKEN = "url"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
# emoticons survive as single tokens (":)" carries sentiment); everything
# else splits into word / @word / #word / single punctuation tokens
_EMOTICON = r"[:;=8][\-o'^]?[)(\[\]dp/\\|*]|<3"
_TOKEN_RE = re.compile(rf"{_EMOTICON}|[@#]\w+|\w+|[^\w\s]")


class UnknownBrandError(ValueError):
    """Source brand id not present in the lexicon."""


@dataclass(frozen=True)
class BrandLexicon:
    """Case-insensitive surface form -> canonical brand id.

    Surfaces must be single tokens under :func:`tokenize` (handles like
    ``telekom_hilft`` qualify; multiword names need one entry per token
    variant). The mask tokens themselves are reserved.
    """

    entries: dict[str, str]
    language: str | None = None

    def __post_init__(self) -> None:
        for surface in self.entries:
            if surface != surface.lower():
                raise ValueError(f"lexicon surface {surface!r} must be lowercase")
            if surface in (TARGET_TOKEN, COMPETITOR_TOKEN):
                raise ValueError(f"surface {surface!r} collides with a mask token")

    @property
    def brands(self) -> frozenset[str]:
        return frozenset(self.entries.values())

    def union(self, other: "BrandLexicon") -> "BrandLexicon":
        merged = dict(self.entries)
        for surface, brand in other.entries.items():
            if merged.get(surface, brand) != brand:
                raise ValueError(
                    f"surface {surface!r} maps to both {merged[surface]!r} and {brand!r}"
                )
            merged[surface] = brand
        language = self.language if self.language == other.language else None
        return BrandLexicon(entries=merged, language=language)


def parse_brand_lexicon(
    lines, language: str | None = None, source: str = "<memory>"
) -> BrandLexicon:
    """Parse '<surface_form><TAB><canonical_id>' lines."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"{source}:{lineno}: expected '<surface>\\t<brand_id>'")
        surface, brand = line.split("\t", 1)
        surface = surface.strip().lower()
        brand = brand.strip()
        if entries.get(surface, brand) != brand:
            raise ValueError(f"{source}:{lineno}: surface {surface!r} maps to two brand ids")
        entries[surface] = brand
    return BrandLexicon(entries=entries, language=language)


def load_brand_lexicon(path: str | Path, language: str | None = None) -> BrandLexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_brand_lexicon(fh, language=language, source=str(path))


@dataclass
class Utterance:
    """One text in processing form; produced from a LabeledExample or raw input."""

    raw_text: str
    tokens: list[str]
    source_brand: str | None = None
    mentioned_brands: tuple[str, ...] = ()
    language: str = "en"
    medium: str = "twitter"
    masked: bool = False
    flags: frozenset[str] = frozenset()


def tokenize(text: str) -> list[str]:
    """Lowercase, collapse URLs to 'url', keep emoticons whole, split the rest
    on whitespace and punctuation. @handles and #hashtags stay single tokens
    for :func:`normalize_social` to unwrap."""
    lowered = _URL_RE.sub(f" {URL_TOKEN} ", text.lower())
    return _TOKEN_RE.findall(lowered)


def normalize_social(
    tokens: list[str],
    keep_hashtag_words: bool = True,
    keep_mention_words: bool = True,
) -> list[str]:
    """Drop Twitter control markers: leading RT tokens, '#'/'@' prefixes.

    The flags control whether the word behind a dropped marker survives
    (default) or the whole token goes.
    """
    out = []
    for tok in tokens:
        if tok.startswith("#") and not keep_hashtag_words:
            continue
        if tok.startswith("@") and not keep_mention_words:
            continue
        stripped = tok.lstrip("@#")
        if stripped:
            out.append(stripped)
    while out and out[0] == "rt":
        out.pop(0)
    return out


def mask_brands(u: Utterance, lexicon: BrandLexicon) -> Utterance:
    """Replace source-brand tokens with 'target' and all other lexicon brands
    with 'competitor'; record distinct mentions in first-mention order.

    Idempotent: an already-masked utterance is returned unchanged. Utterances
    without a source brand (chatbot entries) get competitor masking only.
    """
    if u.masked:
        return u
    if u.source_brand is not None and u.source_brand not in lexicon.brands:
        raise UnknownBrandError(f"unknown source brand id {u.source_brand!r}")
    tokens: list[str] = []
    mentioned: list[str] = []
    for tok in u.tokens:
        brand = lexicon.entries.get(tok)
        if brand is None:
            tokens.append(tok)
            continue
        if brand not in mentioned:
            mentioned.append(brand)
        tokens.append(TARGET_TOKEN if brand == u.source_brand else COMPETITOR_TOKEN)
    return replace(u, tokens=tokens, mentioned_brands=tuple(mentioned), masked=True)


def strip_source_brand(u: Utterance) -> Utterance:
    """Remove 'target' tokens, turning a masked tweet into chatbot-style text.

    An utterance emptied by stripping is kept and flagged, not dropped, so
    dataset counts stay auditable.
    """
    tokens = [t for t in u.tokens if t != TARGET_TOKEN]
    flags = u.flags
    if not tokens:
        flags = flags | {"empty_after_strip"}
    return replace(u, tokens=tokens, flags=flags)


def preprocess_example(
    example: LabeledExample,
    lexicon: BrandLexicon | None = None,
    chatbot_style: bool = False,
) -> Utterance:
    """Full pipeline: tokenize, normalize, mask, and (for chatbot-style use)
    strip the source brand."""
    u = Utterance(
        raw_text=example.raw_text,
        tokens=normalize_social(tokenize(example.raw_text)),
        source_brand=example.source_brand,
        language=example.language,
        medium=example.medium,
    )
    if lexicon is not None:
        u = mask_brands(u, lexicon)
    if chatbot_style or example.medium == "chatbot":
        u = strip_source_brand(u)
    return u


def preprocess_text(
    text: str,
    language: str = "en",
    medium: str = "chatbot",
    source_brand: str | None = None,
    lexicon: BrandLexicon | None = None,
    chatbot_style: bool = False,
) -> Utterance:
    """Pipeline entry point for raw strings (prediction and serving paths)."""
    example = LabeledExample(
        id="", raw_text=text, source_brand=source_brand, label=NON_CHURN,
        language=language, medium=medium,
    )
    return preprocess_example(example, lexicon, chatbot_style)


def augment(example: LabeledExample, lexicon: BrandLexicon) -> list[LabeledExample]:
    """The original plus one non-churn copy per mentioned competitor brand,
    re-masked with that competitor as the target.

    A message churny for its source brand is not churny for the other cited
    brands, so every generated copy is labeled non-churn. Apply to training
    folds only.
    """
    if example.medium != "twitter":
        return [example]
    u = preprocess_example(example, lexicon)
    out = [example]
    for brand in u.mentioned_brands:
        if brand == example.source_brand:
            continue
        out.append(
            relabel(
                example,
                NON_CHURN,
                new_id=f"{example.id}#aug:{brand}",
                source_brand=brand,
            )
        )
    return out
