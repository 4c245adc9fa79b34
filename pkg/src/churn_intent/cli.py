"""Command-line entry points: align, train, evaluate, predict, bootstrap,
serve, export-feedback.

Defaults mirror the reference hyperparameters, so a bare ``train`` run is
the standard configuration. All randomness flows from --seed; every run
prints its resolved configuration to stderr. Errors exit with code 2 and
an ``error:`` prefix on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import model as model_mod
from .align import (
    build_dictionary_matrices,
    evaluate_alignment,
    fit_alignment,
    load_dictionary,
    load_transform,
    apply_alignment,
    save_transform,
)
from .datasets import (
    bootstrap_select,
    concat_datasets,
    keyword_filter,
    load_dataset,
    by_language,
)
from .embeddings import WordEmbeddings, load_embeddings, normalize_rows
from .evaluation import EvalConfig, ExperimentSpec, run_experiment
from .model import ModelConfig, load_checkpoint, predict, save_checkpoint, train
from .resources import default_brand_lexicon, default_keywords
from .service import FeedbackStore, create_server
from .textprep import BrandLexicon, load_brand_lexicon

logger = logging.getLogger(__name__)

_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def _add_embedding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--emb", action="append", required=True, metavar="LANG=PATH",
                   help="embedding file for a language; repeatable")
    p.add_argument("--align", default=None, metavar="PATH",
                   help="alignment transform to map embeddings into a shared space")
    p.add_argument("--max-words", type=int, default=None,
                   help="cap vocabulary size per embedding file")


def _add_lexicon_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lexicon", action="append", default=None, metavar="PATH",
                   help="brand lexicon TSV; repeatable (default: bundled en+de)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filters", type=int, default=256)
    p.add_argument("--kernel", type=int, default=2)
    p.add_argument("--gru-units", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.3)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.001)


def _load_bank(args) -> dict[str, WordEmbeddings]:
    bank: dict[str, WordEmbeddings] = {}
    for spec in args.emb:
        if "=" not in spec:
            raise ValueError(f"--emb expects LANG=PATH, got {spec!r}")
        lang, path = spec.split("=", 1)
        bank[lang] = load_embeddings(path, max_words=args.max_words, language=lang)
    if args.align:
        transform = load_transform(args.align)
        for lang in list(bank):
            if lang in (transform.source_language, transform.target_language):
                bank[lang] = apply_alignment(transform, bank[lang])
    dims = {emb.dim for emb in bank.values()}
    if len(dims) > 1:
        raise ValueError(f"embedding dimensions disagree across languages: {sorted(dims)}")
    return bank


def _load_lexicon(args) -> BrandLexicon:
    if args.lexicon:
        lex = load_brand_lexicon(args.lexicon[0])
        for path in args.lexicon[1:]:
            lex = lex.union(load_brand_lexicon(path))
        return lex
    return default_brand_lexicon("en").union(default_brand_lexicon("de"))


def _model_config(args, embed_dim: int) -> ModelConfig:
    return ModelConfig(
        embed_dim=embed_dim,
        filters=args.filters,
        kernel=args.kernel,
        gru_units=args.gru_units,
        dropout_rate=args.dropout,
        max_epochs=args.epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )


def cmd_align(args) -> int:
    src = normalize_rows(load_embeddings(args.src_emb, max_words=args.max_words,
                                         language=args.src_lang))
    tgt = normalize_rows(load_embeddings(args.tgt_emb, max_words=args.max_words,
                                         language=args.tgt_lang))
    dictionary = load_dictionary(args.dict, test_fraction=args.test_fraction,
                                 seed=args.seed)
    matrices = build_dictionary_matrices(dictionary, "train", src, tgt)
    transform = fit_alignment(matrices.x, matrices.y, threshold=args.threshold,
                              source_language=args.src_lang, target_language=args.tgt_lang)
    save_transform(transform, args.out)
    precision = evaluate_alignment(transform, dictionary, "test", src, tgt, k=1)
    print(f"rank {transform.rank} of {transform.dim} (threshold {transform.threshold})")
    print(f"dropped-pairs {matrices.dropped}")
    print(f"precision@1 {precision:.4f}")
    return 0


def cmd_train(args) -> int:
    bank = _load_bank(args)
    lexicon = _load_lexicon(args)
    examples = concat_datasets(*[load_dataset(p, args.min_confidence) for p in args.data])
    if args.augment:
        from .textprep import augment
        train_set = [out for ex in examples for out in augment(ex, lexicon)]
    else:
        train_set = examples
    test_sets = None
    if args.eval_data:
        test_sets = {"eval": load_dataset(args.eval_data, args.min_confidence)}
    embed_dim = next(iter(bank.values())).dim
    config = _model_config(args, embed_dim)
    params, history = train(train_set, test_sets, bank, config, lexicon=lexicon,
                            chatbot_style=args.chatbot_style)
    save_checkpoint(params, args.out)
    last = history[-1]
    print(f"epochs {len(history)} final-train-loss {last.train_loss:.4f} "
          f"best-epoch {params.best_epoch}")
    for name, prf in (history[params.best_epoch].test_scores or {}).items():
        print(f"best {name} macro-F1 {prf.f1:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    bank = _load_bank(args)
    lexicon = _load_lexicon(args)
    train_corpora = by_language(
        concat_datasets(*[load_dataset(p, args.min_confidence) for p in args.data])
    )
    test_corpora = None
    if args.test_data:
        test_corpora = by_language(
            concat_datasets(*[load_dataset(p, args.min_confidence) for p in args.test_data])
        )
    embed_dim = next(iter(bank.values())).dim
    spec = ExperimentSpec(
        train=train_corpora,
        test=test_corpora,
        embeddings=bank,
        model=_model_config(args, embed_dim),
        lexicon=lexicon,
        mode=args.mode,
        chatbot_style=args.chatbot_style,
        augment_train=args.augment,
        checkpoint_dir=args.checkpoint_dir,
    )
    eval_config = EvalConfig(folds=args.folds, runs=args.runs, alpha=args.alpha,
                             stratified=args.stratified, seed=args.seed)
    report = run_experiment(spec, eval_config)
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(report.format_table())
    return 0


def cmd_predict(args) -> int:
    params = load_checkpoint(args.model)
    bank = _load_bank(args)
    lexicon = _load_lexicon(args)
    if args.text is not None:
        texts = [args.text]
    else:
        content = Path(args.file).read_text(encoding="utf-8")
        texts = [line for line in content.splitlines() if line.strip()]
    if not texts:
        return 0
    predictions = predict(texts, params, bank, lexicon, medium=args.medium,
                          language=args.language,
                          chatbot_style=args.medium == "chatbot")
    for pred in predictions:
        print(f"{pred.label}\t{pred.confidence:.4f}")
    return 0


def cmd_bootstrap(args) -> int:
    corpus = [line for line in Path(args.corpus).read_text(encoding="utf-8").splitlines()
              if line.strip()]
    if not corpus:
        raise ValueError(f"{args.corpus}: empty corpus")
    if not args.keywords and not args.model:
        raise ValueError("need --keywords and/or --model")
    rows: dict[int, dict] = {}
    if args.keywords:
        if args.keywords == "builtin":
            keywords = default_keywords(args.language)
        else:
            keywords = [k for k in Path(args.keywords).read_text("utf-8").splitlines()
                        if k.strip()]
        for hit in keyword_filter(corpus, keywords):
            rows[hit.index] = {"text": hit.text, "keywords": ",".join(hit.matched),
                               "churn_probability": ""}
    if args.model:
        params = load_checkpoint(args.model)
        bank = _load_bank(args)
        lexicon = _load_lexicon(args)

        def churn_probs(texts):
            return model_mod.churn_probabilities(
                texts, params, bank, lexicon, language=args.language)

        for cand in bootstrap_select(churn_probs, corpus, threshold=args.confidence):
            row = rows.setdefault(cand.index, {"text": cand.text, "keywords": ""})
            row["churn_probability"] = f"{cand.churn_probability:.4f}"
    import csv

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["text", "keywords", "churn_probability"])
        writer.writeheader()
        for index in sorted(rows):
            writer.writerow({"text": rows[index]["text"],
                             "keywords": rows[index].get("keywords", ""),
                             "churn_probability": rows[index].get("churn_probability", "")})
    print(f"candidates {len(rows)} of {len(corpus)}")
    return 0


def cmd_serve(args) -> int:
    store = FeedbackStore(args.store)
    predictors = {}
    if args.model:
        params = load_checkpoint(args.model)
        bank = _load_bank(args)
        lexicon = _load_lexicon(args)
        for lang in bank:
            def predictor(text: str, _lang=lang):
                return predict([text], params, bank, lexicon, medium="chatbot",
                               language=_lang, chatbot_style=True)[0]
            predictors[lang] = predictor
    server = create_server(store, predictors, host=args.host, port=args.port,
                           ui_dir=args.ui)
    print(f"serving on http://{args.host}:{server.port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_export_feedback(args) -> int:
    store = FeedbackStore(args.store)
    count = store.export_csv(args.out)
    print(f"exported {count} confirmed records to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="churn-intent",
        description="Multilingual churn-intent detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def register(name: str, fn, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="key=value file; command-line flags win")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=fn)
        _SUBPARSERS[name] = p
        return p

    p = register("align", cmd_align, "fit a bilingual alignment transform")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--src-lang", default="de")
    p.add_argument("--tgt-lang", default="en")
    p.add_argument("--dict", required=True, help="source<TAB>target pairs")
    p.add_argument("--threshold", type=float, default=1.0,
                   help="singular-value cutoff for dimension reduction")
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--max-words", type=int, default=None)
    p.add_argument("--out", required=True)

    p = register("train", cmd_train, "train a classifier and save a checkpoint")
    p.add_argument("--data", action="append", required=True)
    p.add_argument("--eval-data", default=None)
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.add_argument("--chatbot-style", action="store_true",
                   help="strip source-brand mentions from training text")
    p.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True)
    _add_embedding_flags(p)
    _add_lexicon_flag(p)
    _add_model_flags(p)
    p.add_argument("--out", required=True)

    p = register("evaluate", cmd_evaluate, "run the cross-validation protocol")
    p.add_argument("--data", action="append", required=True)
    p.add_argument("--test-data", action="append", default=None,
                   help="transfer mode: corpora to score once per run")
    p.add_argument("--mode", choices=("cv", "transfer"), default="cv")
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--chatbot-style", action="store_true")
    p.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--checkpoint-dir", default=None)
    _add_embedding_flags(p)
    _add_lexicon_flag(p)
    _add_model_flags(p)
    p.add_argument("--out", required=True)

    p = register("predict", cmd_predict, "classify texts with a trained model")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", default=None)
    group.add_argument("--file", default=None)
    p.add_argument("--medium", choices=("twitter", "chatbot"), default="chatbot")
    p.add_argument("--language", default="en")
    _add_embedding_flags(p)
    _add_lexicon_flag(p)

    p = register("bootstrap", cmd_bootstrap, "select annotation candidates")
    p.add_argument("--corpus", required=True, help="one text per line")
    p.add_argument("--keywords", default=None,
                   help="keyword file, or 'builtin' for the bundled list")
    p.add_argument("--model", default=None)
    p.add_argument("--confidence", type=float, default=0.9)
    p.add_argument("--language", default="de")
    p.add_argument("--emb", action="append", default=[], metavar="LANG=PATH")
    p.add_argument("--align", default=None)
    p.add_argument("--max-words", type=int, default=None)
    _add_lexicon_flag(p)
    p.add_argument("--out", required=True)

    p = register("serve", cmd_serve, "run the annotation service")
    p.add_argument("--model", default=None)
    p.add_argument("--emb", action="append", default=[], metavar="LANG=PATH")
    p.add_argument("--align", default=None)
    p.add_argument("--max-words", type=int, default=None)
    _add_lexicon_flag(p)
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui", default=None, help="directory of static UI files")

    p = register("export-feedback", cmd_export_feedback,
                 "export confirmed feedback records to dataset CSV")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Pre-scan for --config and install its key=value pairs as defaults."""
    if not argv or argv[0] not in _SUBPARSERS:
        return
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return
    defaults = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        defaults[key.strip().replace("-", "_")] = value.strip()
    subparser = _SUBPARSERS[argv[0]]
    known = {a.dest: a for a in subparser._actions}
    unknown = [k for k in defaults if k not in known]
    if unknown:
        raise ValueError(f"{path}: unknown config keys {unknown}")
    typed = {}
    for key, value in defaults.items():
        action = known[key]
        if isinstance(action, argparse.BooleanOptionalAction) or isinstance(
            action, argparse._StoreTrueAction
        ):
            typed[key] = value.lower() in ("1", "true", "yes")
        elif action.type is not None:
            typed[key] = action.type(value)
        elif isinstance(action, argparse._AppendAction):
            typed[key] = value.split(",")
        else:
            typed[key] = value
    subparser.set_defaults(**typed)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    resolved = {k: v for k, v in sorted(vars(args).items())
                if k not in ("func", "config")}
    print("config " + " ".join(f"{k}={v}" for k, v in resolved.items()), file=sys.stderr)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("command failed", exc_info=True)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
