"""Cross-validation harness, per-fold scoring, aggregation, and paired
significance testing.

The fold protocol mirrors the training recipe it evaluates: augmentation is
applied to training folds only, the pad length is recomputed from each
fold's training split, and the reported fold score is the maximum
per-epoch test macro-F1 (an optimistic convention kept for comparability;
last-epoch scores are recorded alongside).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .datasets import LabeledExample
from .embeddings import WordEmbeddings
from .metrics import PRF, MeanStd, aggregate, macro_prf
from .model import EpochRecord, ModelConfig, train
from .textprep import BrandLexicon, augment

__all__ = [
    "EvalConfig", "ExperimentSpec", "LanguageReport", "EvalReport",
    "kfold_split", "macro_prf", "aggregate", "significance_test",
    "SignificanceResult", "run_experiment",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 10
    runs: int = 20
    alpha: float = 0.05
    stratified: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def kfold_split(
    dataset: Sequence,
    k: int,
    seed: int = 0,
    stratified: bool = False,
    label_fn: Callable | None = None,
) -> list[list[int]]:
    """Disjoint, covering index folds with sizes differing by at most one.

    Stratified mode deals each label class round-robin across folds, so per-
    fold class counts differ by at most one as well.
    """
    n = len(dataset)
    if n < k:
        raise ValueError(f"dataset of size {n} cannot be split into {k} folds")
    rng = np.random.default_rng(seed)
    if not stratified:
        order = rng.permutation(n)
        return [list(map(int, fold)) for fold in np.array_split(order, k)]
    label_fn = label_fn or (lambda ex: ex.label)
    by_class: dict = {}
    for i, ex in enumerate(dataset):
        by_class.setdefault(label_fn(ex), []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for cls in sorted(by_class, key=str):
        idx = np.array(by_class[cls])
        rng.shuffle(idx)
        for i in idx:
            folds[cursor % k].append(int(i))
            cursor += 1
    return folds


@dataclass(frozen=True)
class SignificanceResult:
    reject: bool
    p_value: float
    statistic: float
    degenerate: bool = False  # zero-variance nonzero shift, p reported as 0


def significance_test(
    runs_a: Sequence[float],
    runs_b: Sequence[float],
    alpha: float = 0.05,
    method: str = "ttest",
) -> SignificanceResult:
    """Two-sided paired test over per-run scores; reject when p < alpha.

    ``method`` is "ttest" (paired t-test) or "wilcoxon" (signed-rank).
    """
    if len(runs_a) != len(runs_b):
        raise ValueError(f"paired runs differ in length: {len(runs_a)} vs {len(runs_b)}")
    if len(runs_a) < 2:
        raise ValueError("need at least 2 paired runs")
    a = np.asarray(runs_a, dtype=np.float64)
    b = np.asarray(runs_b, dtype=np.float64)
    diffs = b - a
    if np.all(diffs == 0):
        return SignificanceResult(reject=False, p_value=1.0, statistic=0.0)
    if np.std(diffs) == 0:
        # constant nonzero shift: the paired statistic diverges
        return SignificanceResult(
            reject=True, p_value=0.0,
            statistic=float(np.sign(diffs[0]) * np.inf), degenerate=True,
        )
    if method == "ttest":
        stat, p = scipy_stats.ttest_rel(b, a)
    elif method == "wilcoxon":
        stat, p = scipy_stats.wilcoxon(b, a)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SignificanceResult(reject=bool(p < alpha), p_value=float(p), statistic=float(stat))


@dataclass
class ExperimentSpec:
    """What to train on, what to test on, and in which embedding space.

    ``mode="cv"`` cross-validates the training corpora (test == held-out
    folds); ``mode="transfer"`` trains on the full corpora and scores each
    test corpus once (the social-media-to-chatbot setting).
    """

    train: Mapping[str, Sequence[LabeledExample]]  # language -> corpus
    embeddings: WordEmbeddings | Mapping[str, WordEmbeddings]
    model: ModelConfig
    test: Mapping[str, Sequence[LabeledExample]] | None = None
    lexicon: BrandLexicon | None = None
    mode: str = "cv"
    chatbot_style: bool = False
    augment_train: bool = True
    checkpoint_dir: str | None = None  # save the best params of every training

    def __post_init__(self) -> None:
        if self.mode not in ("cv", "transfer"):
            raise ValueError(f"mode must be cv or transfer, got {self.mode!r}")
        if self.mode == "transfer" and not self.test:
            raise ValueError("transfer mode needs explicit test corpora")
        if not self.train or not any(len(v) for v in self.train.values()):
            raise ValueError("empty training spec")


@dataclass
class FoldScore:
    run: int
    fold: int
    best: PRF       # at the epoch maximizing test macro-F1
    final: PRF      # at the last trained epoch
    best_epoch: int


@dataclass
class LanguageReport:
    language: str
    fold_scores: list[FoldScore]
    run_means: list[float]  # per-run mean of best-F1 over folds
    f1: MeanStd
    precision: MeanStd
    recall: MeanStd

    def __post_init__(self) -> None:
        for ms in (self.f1, self.precision, self.recall):
            if not 0.0 <= ms.mean <= 1.0 or ms.std < 0.0:
                raise ValueError(f"invalid aggregate {ms}")


@dataclass
class EvalReport:
    languages: dict[str, LanguageReport]
    mode: str
    folds: int
    runs: int
    seed: int
    stratified: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def format_table(self) -> str:
        lines = [f"{'test':<6} {'F1':>16} {'precision':>16} {'recall':>16}"]
        for lang in sorted(self.languages):
            rep = self.languages[lang]
            cells = [
                f"{100 * ms.mean:.2f} +- {100 * ms.std:.2f}"
                for ms in (rep.f1, rep.precision, rep.recall)
            ]
            lines.append(f"{lang:<6} {cells[0]:>16} {cells[1]:>16} {cells[2]:>16}")
        return "\n".join(lines)


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _best_and_final(history: list[EpochRecord], name: str) -> tuple[PRF, PRF, int]:
    series = [(rec.epoch, rec.test_scores[name]) for rec in history
              if name in rec.test_scores]
    if not series:
        raise ValueError(f"no recorded scores for test set {name!r}")
    best_epoch, best = max(series, key=lambda pair: pair[1].f1)
    return best, series[-1][1], best_epoch


def _augmented(examples: Sequence[LabeledExample], spec: ExperimentSpec) -> list[LabeledExample]:
    if not spec.augment_train or spec.lexicon is None:
        return list(examples)
    out: list[LabeledExample] = []
    for ex in examples:
        out.extend(augment(ex, spec.lexicon))
    return out


def run_experiment(spec: ExperimentSpec, config: EvalConfig) -> EvalReport:
    """Execute the full protocol and aggregate per test language.

    Reproducible: every fold/run seed derives from (config.seed, run, fold).
    """
    scores: dict[str, list[FoldScore]] = {lang: [] for lang in
                                          (spec.test or spec.train)}
    for run in range(config.runs):
        if spec.mode == "cv":
            _run_cv(spec, config, run, scores)
        else:
            _run_transfer(spec, config, run, scores)

    languages: dict[str, LanguageReport] = {}
    for lang, fold_scores in scores.items():
        if not fold_scores:
            continue
        run_means = [
            float(np.mean([fs.best.f1 for fs in fold_scores if fs.run == run]))
            for run in range(config.runs)
        ]
        languages[lang] = LanguageReport(
            language=lang,
            fold_scores=fold_scores,
            run_means=run_means,
            f1=aggregate([fs.best.f1 for fs in fold_scores]),
            precision=aggregate([fs.best.precision for fs in fold_scores]),
            recall=aggregate([fs.best.recall for fs in fold_scores]),
        )
    return EvalReport(
        languages=languages,
        mode=spec.mode,
        folds=config.folds if spec.mode == "cv" else 1,
        runs=config.runs,
        seed=config.seed,
        stratified=config.stratified,
    )


def _run_cv(spec: ExperimentSpec, config: EvalConfig, run: int,
            scores: dict[str, list[FoldScore]]) -> None:
    langs = sorted(spec.train)
    folds_by_lang = {
        lang: kfold_split(
            spec.train[lang], config.folds,
            seed=_derive_seed(config.seed, run, i),
            stratified=config.stratified,
        )
        for i, lang in enumerate(langs)
    }
    for fold in range(config.folds):
        train_set: list[LabeledExample] = []
        test_sets: dict[str, list[LabeledExample]] = {}
        for lang in langs:
            data = spec.train[lang]
            test_idx = set(folds_by_lang[lang][fold])
            fold_train = [data[i] for i in range(len(data)) if i not in test_idx]
            train_set.extend(_augmented(fold_train, spec))
            test_sets[lang] = [data[i] for i in sorted(test_idx)]
        model_config = replace(
            spec.model, seed=_derive_seed(config.seed, run, fold, 7919), max_len=None
        )
        params, history = train(
            train_set, test_sets, spec.embeddings, model_config,
            lexicon=spec.lexicon, chatbot_style=spec.chatbot_style,
        )
        _maybe_checkpoint(spec, params, run, fold)
        for lang in langs:
            best, final, best_epoch = _best_and_final(history, lang)
            scores[lang].append(FoldScore(run=run, fold=fold, best=best,
                                          final=final, best_epoch=best_epoch))
        logger.info("run %d fold %d done: %s", run, fold,
                    {l: round(scores[l][-1].best.f1, 4) for l in langs})


def _run_transfer(spec: ExperimentSpec, config: EvalConfig, run: int,
                  scores: dict[str, list[FoldScore]]) -> None:
    train_set: list[LabeledExample] = []
    for lang in sorted(spec.train):
        train_set.extend(_augmented(spec.train[lang], spec))
    test_sets = {lang: list(examples) for lang, examples in spec.test.items()}
    model_config = replace(
        spec.model, seed=_derive_seed(config.seed, run, 104729), max_len=None
    )
    params, history = train(
        train_set, test_sets, spec.embeddings, model_config,
        lexicon=spec.lexicon, chatbot_style=spec.chatbot_style,
    )
    _maybe_checkpoint(spec, params, run, 0)
    for lang in test_sets:
        best, final, best_epoch = _best_and_final(history, lang)
        scores[lang].append(FoldScore(run=run, fold=0, best=best,
                                      final=final, best_epoch=best_epoch))


def _maybe_checkpoint(spec: ExperimentSpec, params, run: int, fold: int) -> None:
    if spec.checkpoint_dir is None:
        return
    from pathlib import Path

    from .model import save_checkpoint

    directory = Path(spec.checkpoint_dir)
    directory.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, directory / f"run{run:02d}_fold{fold:02d}.chk")
