#!/usr/bin/env python3
"""Train a small demo model on the synthetic corpus and launch the annotation
service (optionally just writing the artifacts for a later `serve` run).

The demo shares one embedding space for both languages, so the service can
answer /predict for EN and DE inputs out of the box.
"""

import argparse
from pathlib import Path

from churn_intent.embeddings import save_embeddings
from churn_intent.model import ModelConfig, save_checkpoint, train
from churn_intent.cli import main as cli_main
from churn_intent.synthetic import make_toy_corpus


def prepare(workdir: Path, seed: int) -> tuple[Path, Path]:
    workdir.mkdir(parents=True, exist_ok=True)
    examples, emb = make_toy_corpus(n_examples=64, dim=32, seed=seed)
    config = ModelConfig(embed_dim=32, filters=16, kernel=2, gru_units=8,
                         max_epochs=60, patience=60, batch_size=8, seed=seed)
    params, _ = train(examples, {"train": examples}, emb, config)
    emb_path = workdir / "demo.vec"
    model_path = workdir / "demo_model.chk"
    save_embeddings(emb, emb_path)
    save_checkpoint(params, model_path)
    return emb_path, model_path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--ui", default=None, help="static UI directory to serve")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--prepare-only", action="store_true",
                        help="write artifacts and print the serve command")
    args = parser.parse_args()

    workdir = Path(args.workdir)
    emb_path, model_path = prepare(workdir, args.seed)
    serve_args = [
        "serve",
        "--model", str(model_path),
        "--emb", f"en={emb_path}",
        "--emb", f"de={emb_path}",
        "--store", str(workdir / "store"),
        "--host", args.host,
        "--port", str(args.port),
    ]
    if args.ui:
        serve_args += ["--ui", args.ui]
    if args.prepare_only:
        print("artifacts ready; run:\n  churn-intent " + " ".join(serve_args))
        return
    raise SystemExit(cli_main(serve_args))


if __name__ == "__main__":
    main()
