"""Synthetic corpora for desk-scale experiments and tests.

Three generators: a rotation fixture for the alignment pipeline, a tiny
separable corpus for overfit sanity checks, and a two-language corpus with
shared latent churn templates linked by a known rotation, used to measure
the multilingual transfer benefit without the original datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .align import BilingualDictionary
from .datasets import CHURN, NON_CHURN, LabeledExample
from .embeddings import WordEmbeddings


def _unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class RotationFixture:
    source: WordEmbeddings
    target: WordEmbeddings
    dictionary: BilingualDictionary
    rotation: np.ndarray  # the map the fit should recover


def make_rotation_fixture(
    d: int = 20,
    n_words: int = 120,
    seed: int = 0,
    noise: float = 0.0,
    test_fraction: float = 0.1,
) -> RotationFixture:
    """Source words with unit vectors, targets rotated by a random orthogonal
    map (plus optional additive noise), and the word-to-word dictionary."""
    rng = np.random.default_rng(seed)
    x = _unit_rows(rng, n_words, d)
    q = random_orthogonal(rng, d)
    y = x @ q.T
    if noise > 0.0:
        y = y + noise * rng.normal(size=y.shape)
        y = y / np.linalg.norm(y, axis=1, keepdims=True)
    src_words = [f"s{i}" for i in range(n_words)]
    tgt_words = [f"t{i}" for i in range(n_words)]
    source = WordEmbeddings(
        language="de", dim=d, vocab={w: i for i, w in enumerate(src_words)},
        matrix=x.astype(np.float32), normalized=True,
    )
    target = WordEmbeddings(
        language="en", dim=d, vocab={w: i for i, w in enumerate(tgt_words)},
        matrix=y.astype(np.float32), normalized=True,
    )
    dictionary = BilingualDictionary.from_pairs(
        list(zip(src_words, tgt_words)), test_fraction=test_fraction, seed=seed
    )
    return RotationFixture(source=source, target=target, dictionary=dictionary, rotation=q)


CHURN_WORDS = ("leave", "quit", "cancel", "switch", "done", "bye", "out", "goodbye")
STAY_WORDS = ("love", "great", "happy", "thanks", "good", "awesome", "nice", "cool")


def make_toy_corpus(
    n_examples: int = 32,
    dim: int = 300,
    seed: int = 0,
    language: str = "en",
) -> tuple[list[LabeledExample], WordEmbeddings]:
    """Separable corpus: churn and non-churn draw from disjoint vocabularies
    with random (seeded) word vectors."""
    rng = np.random.default_rng(seed)
    vocab_words = list(CHURN_WORDS + STAY_WORDS)
    matrix = _unit_rows(rng, len(vocab_words), dim).astype(np.float32)
    emb = WordEmbeddings(
        language=language, dim=dim,
        vocab={w: i for i, w in enumerate(vocab_words)}, matrix=matrix,
    )
    examples = []
    for i in range(n_examples):
        churny = i % 2 == 0
        pool = CHURN_WORDS if churny else STAY_WORDS
        length = int(rng.integers(3, 7))
        words = [pool[int(rng.integers(len(pool)))] for _ in range(length)]
        examples.append(
            LabeledExample(
                id=f"toy-{i}",
                raw_text=" ".join(words),
                source_brand=None,
                label=CHURN if churny else NON_CHURN,
                language=language,
                medium="twitter",
            )
        )
    return examples, emb


# latent concept ids for the bilingual corpus
_SWITCH, _AWAY, _TOWARD, _PROVIDER, _CONTRACT, _CANCEL, _LEAVE, _STAY = range(8)
_LOVE, _HAPPY, _THANKS, _PRICE, _QUESTION, _SERVICE, _DONE, _BYE = range(8, 16)
_FILLERS = tuple(range(16, 28))

# churn needs a leaving pattern; "switch" alone is ambiguous: direction decides
_CHURN_TEMPLATES = (
    (_SWITCH, _PROVIDER, _AWAY),
    (_CANCEL, _CONTRACT),
    (_LEAVE, _PROVIDER),
    (_DONE, _PROVIDER, _AWAY),
    (_BYE, _PROVIDER, _AWAY),
    (_CANCEL, _SERVICE, _AWAY),
)
_NON_CHURN_TEMPLATES = (
    (_SWITCH, _PROVIDER, _TOWARD),
    (_LOVE, _PROVIDER),
    (_HAPPY, _SERVICE),
    (_PRICE, _QUESTION, _PROVIDER),
    (_STAY, _PROVIDER),
    (_THANKS, _SERVICE),
)
_N_CONCEPTS = 28


@dataclass(frozen=True)
class BilingualCorpus:
    high_train: list[LabeledExample]  # EN, all templates
    low_train: list[LabeledExample]  # DE, half the templates
    low_test: list[LabeledExample]  # DE, all templates
    embeddings: dict[str, WordEmbeddings]  # raw (unaligned) spaces
    dictionary: BilingualDictionary
    rotation: np.ndarray


def _word(concept: int, language: str) -> str:
    return f"w{concept}{language}"


def _render(
    rng: np.random.Generator, template: tuple[int, ...], language: str
) -> str:
    n_fill = int(rng.integers(2, 5))
    fillers = [int(f) for f in rng.choice(_FILLERS, size=n_fill)]
    cut = int(rng.integers(0, n_fill + 1))
    concepts = fillers[:cut] + list(template) + fillers[cut:]
    return " ".join(_word(c, language) for c in concepts)


def _sample_examples(
    rng: np.random.Generator,
    n: int,
    language: str,
    churn_templates,
    non_churn_templates,
    tag: str,
) -> list[LabeledExample]:
    out = []
    for i in range(n):
        churny = rng.random() < 0.4
        pool = churn_templates if churny else non_churn_templates
        template = pool[int(rng.integers(len(pool)))]
        out.append(
            LabeledExample(
                id=f"{tag}-{i}",
                raw_text=_render(rng, template, language),
                source_brand=None,
                label=CHURN if churny else NON_CHURN,
                language=language,
                medium="twitter",
            )
        )
    return out


def make_bilingual_corpus(
    n_high: int = 800,
    n_low_train: int = 100,
    n_low_test: int = 50,
    dim: int = 16,
    seed: int = 0,
    concept_noise: float = 0.05,
) -> BilingualCorpus:
    """Two-language corpus over shared latent churn templates.

    Both languages express the same concepts; each language's word vectors
    live in its own space, linked by a known random rotation. The
    low-resource training split only covers half of the templates while its
    test split covers all of them, which is where cross-language transfer
    has to help.
    """
    rng = np.random.default_rng(seed)
    latent = _unit_rows(rng, _N_CONCEPTS, dim)
    rotation = random_orthogonal(rng, dim)

    banks: dict[str, WordEmbeddings] = {}
    for language, transform in (("en", None), ("de", rotation)):
        vectors = latent + concept_noise * rng.normal(size=latent.shape)
        if transform is not None:
            vectors = vectors @ transform.T
        vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        vocab = {_word(c, language): c for c in range(_N_CONCEPTS)}
        banks[language] = WordEmbeddings(
            language=language, dim=dim, vocab=vocab,
            matrix=vectors.astype(np.float32), normalized=True,
        )

    half_churn = _CHURN_TEMPLATES[: len(_CHURN_TEMPLATES) // 2]
    half_non = _NON_CHURN_TEMPLATES[: len(_NON_CHURN_TEMPLATES) // 2]
    high_train = _sample_examples(
        rng, n_high, "en", _CHURN_TEMPLATES, _NON_CHURN_TEMPLATES, "en")
    low_train = _sample_examples(rng, n_low_train, "de", half_churn, half_non, "detr")
    low_test = _sample_examples(
        rng, n_low_test, "de", _CHURN_TEMPLATES, _NON_CHURN_TEMPLATES, "dete")

    pairs = [(_word(c, "de"), _word(c, "en")) for c in range(_N_CONCEPTS)]
    dictionary = BilingualDictionary.from_pairs(pairs, test_fraction=0.2, seed=seed)
    return BilingualCorpus(
        high_train=high_train,
        low_train=low_train,
        low_test=low_test,
        embeddings=banks,
        dictionary=dictionary,
        rotation=rotation,
    )
