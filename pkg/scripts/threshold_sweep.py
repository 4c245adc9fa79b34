#!/usr/bin/env python3
"""Sweep the singular-value threshold of the alignment and report dictionary
test precision@1 per retained rank, on the synthetic rotation fixture or on
real embedding/dictionary files.
"""

import argparse

import numpy as np

from churn_intent.align import (
    build_dictionary_matrices,
    evaluate_alignment,
    fit_alignment,
    load_dictionary,
    reduce_dimensions,
)
from churn_intent.embeddings import load_embeddings, normalize_rows
from churn_intent.synthetic import make_rotation_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--src-emb", help="source vector file (fixture when omitted)")
    parser.add_argument("--tgt-emb")
    parser.add_argument("--dict")
    parser.add_argument("--src-lang", default="de")
    parser.add_argument("--tgt-lang", default="en")
    parser.add_argument("--noise", type=float, default=0.05,
                        help="fixture target noise")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--steps", type=int, default=8)
    parser.add_argument("--k", type=int, default=1)
    args = parser.parse_args()

    if args.src_emb:
        src = normalize_rows(load_embeddings(args.src_emb, language=args.src_lang))
        tgt = normalize_rows(load_embeddings(args.tgt_emb, language=args.tgt_lang))
        dictionary = load_dictionary(args.dict, seed=args.seed)
    else:
        fx = make_rotation_fixture(d=24, n_words=200, seed=args.seed,
                                   noise=args.noise)
        src, tgt, dictionary = fx.source, fx.target, fx.dictionary

    mats = build_dictionary_matrices(dictionary, "train", src, tgt)
    base = fit_alignment(mats.x, mats.y, source_language=src.language,
                         target_language=tgt.language)
    sv = base.singular_values
    print(f"singular values: max {sv[0]:.3f} min {sv[-1]:.3f}")
    thresholds = np.linspace(sv[-1], sv[0], args.steps, endpoint=False)
    print(f"{'threshold':>10} {'rank':>5} {'precision@' + str(args.k):>12}")
    for threshold in thresholds:
        t = reduce_dimensions(base, float(threshold))
        precision = evaluate_alignment(t, dictionary, "test", src, tgt, k=args.k)
        print(f"{threshold:>10.3f} {t.rank:>5} {precision:>12.4f}")


if __name__ == "__main__":
    main()
