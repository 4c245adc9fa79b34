#!/usr/bin/env python3
"""Desk-scale multilingual transfer experiment.

Per seed: train a monolingual classifier on the low-resource corpus and a
joint classifier on aligned high+low corpora, score both on the low-resource
test split, and compare with a paired test over the seeds.
"""

import argparse

import numpy as np

from churn_intent.align import apply_alignment, build_dictionary_matrices, fit_alignment
from churn_intent.embeddings import normalize_rows
from churn_intent.evaluation import significance_test
from churn_intent.metrics import macro_prf
from churn_intent.model import LABEL_TO_INDEX, ModelConfig, predict, train
from churn_intent.synthetic import make_bilingual_corpus


def macro_f1(params, test_set, bank) -> float:
    preds = predict(test_set, params, bank)
    golds = [LABEL_TO_INDEX[ex.label] for ex in test_set]
    labels = [LABEL_TO_INDEX[p.label] for p in preds]
    return macro_prf(labels, golds).f1


def run_seed(seed: int, args) -> tuple[float, float]:
    corpus = make_bilingual_corpus(
        n_high=args.high, n_low_train=args.low_train, n_low_test=args.low_test,
        dim=args.dim, seed=seed,
    )
    config = ModelConfig(
        embed_dim=args.dim, filters=args.filters, kernel=2, gru_units=args.gru_units,
        dropout_rate=0.3, max_epochs=args.epochs, patience=6, seed=seed,
    )
    mono, _ = train(corpus.low_train, None, corpus.embeddings["de"], config)
    f1_mono = macro_f1(mono, corpus.low_test, corpus.embeddings["de"])

    src = normalize_rows(corpus.embeddings["de"])
    tgt = normalize_rows(corpus.embeddings["en"])
    mats = build_dictionary_matrices(corpus.dictionary, "train", src, tgt)
    transform = fit_alignment(mats.x, mats.y)
    bank = {"de": apply_alignment(transform, corpus.embeddings["de"]),
            "en": corpus.embeddings["en"]}
    joint, _ = train(corpus.high_train + corpus.low_train, None, bank, config)
    return f1_mono, macro_f1(joint, corpus.low_test, bank)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--high", type=int, default=800)
    parser.add_argument("--low-train", type=int, default=100)
    parser.add_argument("--low-test", type=int, default=50)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--filters", type=int, default=16)
    parser.add_argument("--gru-units", type=int, default=8)
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--alpha", type=float, default=0.05)
    args = parser.parse_args()

    mono_scores, joint_scores = [], []
    print(f"{'seed':>4} {'mono F1':>8} {'joint F1':>9} {'margin':>8}")
    for seed in range(args.seeds):
        f1_mono, f1_joint = run_seed(seed, args)
        mono_scores.append(f1_mono)
        joint_scores.append(f1_joint)
        print(f"{seed:>4} {f1_mono:>8.4f} {f1_joint:>9.4f} "
              f"{f1_joint - f1_mono:>+8.4f}")

    wins = sum(j > m for m, j in zip(mono_scores, joint_scores))
    print(f"\njoint wins {wins}/{args.seeds} seeds")
    print(f"mono  mean {np.mean(mono_scores):.4f} +- {np.std(mono_scores):.4f}")
    print(f"joint mean {np.mean(joint_scores):.4f} +- {np.std(joint_scores):.4f}")
    if args.seeds >= 2:
        result = significance_test(mono_scores, joint_scores, alpha=args.alpha)
        verdict = "reject" if result.reject else "retain"
        print(f"paired t-test: p={result.p_value:.2e} -> {verdict} at "
              f"alpha={args.alpha}")


if __name__ == "__main__":
    main()
