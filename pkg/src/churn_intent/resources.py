"""Bundled data files: stopword lists, the starter churn keyword list, and
editable brand lexicons."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .textprep import BrandLexicon, parse_brand_lexicon


def _read(name: str) -> str:
    return resources.files("churn_intent.data").joinpath(name).read_text("utf-8")


@lru_cache(maxsize=None)
def default_stopwords(language: str) -> frozenset[str]:
    return frozenset(
        line.strip() for line in _read(f"stopwords_{language}.txt").splitlines()
        if line.strip()
    )


def default_keywords(language: str = "de") -> list[str]:
    return [line.strip() for line in _read(f"keywords_{language}.txt").splitlines()
            if line.strip()]


@lru_cache(maxsize=None)
def default_brand_lexicon(language: str) -> BrandLexicon:
    lines = _read(f"brands_{language}.tsv").splitlines()
    return parse_brand_lexicon(lines, language=language, source=f"brands_{language}.tsv")
