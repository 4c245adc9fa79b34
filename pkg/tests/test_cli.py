import numpy as np
import pytest

from churn_intent.cli import main
from churn_intent.datasets import CHURN, NON_CHURN
from churn_intent.embeddings import save_embeddings
from churn_intent.synthetic import make_rotation_fixture, make_toy_corpus

from conftest import write_dataset_csv


@pytest.fixture
def align_files(tmp_path):
    fx = make_rotation_fixture(d=8, n_words=40, seed=0)
    src = tmp_path / "de.vec"
    tgt = tmp_path / "en.vec"
    save_embeddings(fx.source, src)
    save_embeddings(fx.target, tgt)
    dict_path = tmp_path / "dict.tsv"
    dict_path.write_text(
        "\n".join(f"{s}\t{t}" for s, t in fx.dictionary.pairs) + "\n", "utf-8")
    return src, tgt, dict_path


@pytest.fixture
def toy_files(tmp_path):
    examples, emb = make_toy_corpus(n_examples=24, dim=8, seed=0)
    emb_path = tmp_path / "toy.vec"
    save_embeddings(emb, emb_path)
    rows = [{"id": ex.id, "text": ex.raw_text, "brand": "",
             "label": "1" if ex.label == CHURN else "0", "confidence": "1",
             "language": "en", "medium": "twitter"} for ex in examples]
    data_path = write_dataset_csv(tmp_path / "toy.csv", rows)
    return emb_path, data_path


class TestAlignCommand:
    def test_rotation_fixture_precision(self, align_files, tmp_path, capsys):
        src, tgt, dict_path = align_files
        out = tmp_path / "transform.chk"
        code = main(["align", "--src-emb", str(src), "--tgt-emb", str(tgt),
                     "--dict", str(dict_path), "--threshold", "0.0001",
                     "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        assert out.exists()
        assert "precision@1 1.0000" in captured.out

    def test_missing_dictionary_exit_2(self, align_files, tmp_path, capsys):
        src, tgt, _ = align_files
        code = main(["align", "--src-emb", str(src), "--tgt-emb", str(tgt),
                     "--dict", str(tmp_path / "missing.tsv"),
                     "--out", str(tmp_path / "t.chk")])
        captured = capsys.readouterr()
        assert code == 2
        assert "error:" in captured.err
        assert "missing.tsv" in captured.err

    def test_prints_resolved_config(self, align_files, tmp_path, capsys):
        src, tgt, dict_path = align_files
        main(["align", "--src-emb", str(src), "--tgt-emb", str(tgt),
              "--dict", str(dict_path), "--out", str(tmp_path / "t.chk")])
        captured = capsys.readouterr()
        assert "config " in captured.err
        assert "threshold=1.0" in captured.err  # reference default


class TestTrainPredict:
    def test_end_to_end(self, toy_files, tmp_path, capsys):
        emb_path, data_path = toy_files
        model_path = tmp_path / "model.chk"
        code = main(["train", "--data", str(data_path), "--emb", f"en={emb_path}",
                     "--filters", "4", "--gru-units", "3", "--epochs", "30",
                     "--patience", "30", "--batch-size", "8",
                     "--out", str(model_path)])
        assert code == 0
        assert model_path.exists()
        capsys.readouterr()

        code = main(["predict", "--model", str(model_path),
                     "--emb", f"en={emb_path}", "--text", "leave quit cancel"])
        captured = capsys.readouterr()
        assert code == 0
        line = captured.out.strip().splitlines()[-1]
        label, confidence = line.split("\t")
        assert label in (CHURN, NON_CHURN)
        assert 0.5 <= float(confidence) <= 1.0

    def test_predict_empty_file(self, toy_files, tmp_path, capsys):
        emb_path, data_path = toy_files
        model_path = tmp_path / "model.chk"
        main(["train", "--data", str(data_path), "--emb", f"en={emb_path}",
              "--filters", "4", "--gru-units", "3", "--epochs", "2",
              "--out", str(model_path)])
        capsys.readouterr()
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        code = main(["predict", "--model", str(model_path),
                     "--emb", f"en={emb_path}", "--file", str(empty)])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out == ""

    def test_missing_checkpoint_exit_2(self, toy_files, tmp_path, capsys):
        emb_path, _ = toy_files
        code = main(["predict", "--model", str(tmp_path / "none.chk"),
                     "--emb", f"en={emb_path}", "--text", "hi there"])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_byte_identical_reports(self, toy_files, tmp_path, capsys):
        emb_path, data_path = toy_files
        out_a = tmp_path / "report_a.json"
        out_b = tmp_path / "report_b.json"
        flags = ["evaluate", "--data", str(data_path), "--emb", f"en={emb_path}",
                 "--folds", "3", "--runs", "1", "--seed", "5",
                 "--filters", "4", "--gru-units", "3", "--epochs", "2",
                 "--no-augment"]
        assert main(flags + ["--out", str(out_a)]) == 0
        assert main(flags + ["--out", str(out_b)]) == 0
        capsys.readouterr()
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_default_folds_runs(self, capsys):
        from churn_intent.cli import build_parser

        parser = build_parser()
        args = parser.parse_args(["evaluate", "--data", "x.csv", "--emb", "en=e.vec",
                                  "--out", "r.json"])
        assert args.folds == 10
        assert args.runs == 20


class TestBootstrapCommand:
    def test_keyword_mode(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text(
            "ich will zur konkurrenz\nalles super danke\nvertrag beenden bitte\n",
            "utf-8")
        out = tmp_path / "candidates.csv"
        code = main(["bootstrap", "--corpus", str(corpus), "--keywords", "builtin",
                     "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        assert "candidates 2 of 3" in captured.out
        content = out.read_text("utf-8")
        assert "zur konkurrenz" in content and "vertrag beende" in content

    def test_model_mode(self, toy_files, tmp_path, capsys):
        emb_path, data_path = toy_files
        model_path = tmp_path / "model.chk"
        main(["train", "--data", str(data_path), "--emb", f"en={emb_path}",
              "--filters", "4", "--gru-units", "3", "--epochs", "30",
              "--patience", "30", "--batch-size", "8", "--out", str(model_path)])
        capsys.readouterr()
        corpus = tmp_path / "corpus.txt"
        corpus.write_text("leave quit cancel\nlove great happy\n", "utf-8")
        out = tmp_path / "boot.csv"
        code = main(["bootstrap", "--corpus", str(corpus), "--model", str(model_path),
                     "--emb", f"en={emb_path}", "--language", "en",
                     "--confidence", "0.6", "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_empty_corpus_errors(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text("")
        code = main(["bootstrap", "--corpus", str(corpus), "--keywords", "builtin",
                     "--out", str(tmp_path / "o.csv")])
        assert code == 2


class TestExportFeedback:
    def test_export(self, tmp_path, capsys):
        from churn_intent.service import FeedbackStore

        store = FeedbackStore(tmp_path / "store")
        rec = store.add_feedback("i am leaving", CHURN, "approve", "en")
        store.review(rec.id, CHURN)
        out = tmp_path / "export.csv"
        code = main(["export-feedback", "--store", str(tmp_path / "store"),
                     "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        assert "exported 1" in captured.out


class TestConfigFile:
    def test_config_file_defaults_and_flag_override(self, align_files, tmp_path,
                                                    capsys):
        src, tgt, dict_path = align_files
        config = tmp_path / "run.conf"
        config.write_text("threshold=0.5\ntest-fraction=0.2\n", "utf-8")
        out = tmp_path / "t.chk"
        code = main(["align", "--config", str(config), "--src-emb", str(src),
                     "--tgt-emb", str(tgt), "--dict", str(dict_path),
                     "--threshold", "0.0001", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        # flag wins over config file; config file wins over parser default
        assert "threshold=0.0001" in captured.err
        assert "test_fraction=0.2" in captured.err

    def test_unknown_config_key_rejected(self, align_files, tmp_path, capsys):
        src, tgt, dict_path = align_files
        config = tmp_path / "run.conf"
        config.write_text("bogus=1\n", "utf-8")
        code = main(["align", "--config", str(config), "--src-emb", str(src),
                     "--tgt-emb", str(tgt), "--dict", str(dict_path),
                     "--out", str(tmp_path / "t.chk")])
        assert code == 2
