import numpy as np
import pytest

from churn_intent.checkpoint import CheckpointError
from churn_intent.datasets import CHURN, NON_CHURN
from churn_intent.embeddings import WordEmbeddings
from churn_intent.model import (
    DimensionMismatchError,
    EmptyUtteranceError,
    ModelConfig,
    encode,
    forward,
    init_params,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from churn_intent.synthetic import make_toy_corpus
from churn_intent.textprep import Utterance

from conftest import example

SMALL = ModelConfig(embed_dim=8, filters=6, kernel=2, gru_units=4,
                    dropout_rate=0.3, max_len=6, max_epochs=5, seed=0)


def utterance(tokens):
    return Utterance(raw_text=" ".join(tokens), tokens=list(tokens))


@pytest.fixture
def emb():
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(12)]
    return WordEmbeddings(
        "en", 8, {w: i for i, w in enumerate(words)},
        rng.normal(size=(12, 8)).astype(np.float32),
    )


class TestEncode:
    def test_padding(self, emb):
        mat, truncated = encode(utterance(["w0", "w1", "w2"]), emb, SMALL)
        assert mat.shape == (6, 8)
        assert not truncated
        assert np.any(mat[0] != 0) and np.all(mat[3:] == 0)

    def test_exact_length_no_padding(self, emb):
        mat, truncated = encode(utterance([f"w{i}" for i in range(6)]), emb, SMALL)
        assert not truncated
        assert np.all(np.any(mat != 0, axis=1))

    def test_truncation_flagged(self, emb):
        mat, truncated = encode(utterance([f"w{i}" for i in range(9)]), emb, SMALL)
        assert truncated
        assert mat.shape == (6, 8)

    def test_empty_rejected(self, emb):
        with pytest.raises(EmptyUtteranceError):
            encode(utterance([]), emb, SMALL)

    def test_dim_mismatch_names_both(self, emb):
        cfg = ModelConfig(embed_dim=5, filters=2, kernel=2, gru_units=2, max_len=4)
        with pytest.raises(DimensionMismatchError, match="8.*5"):
            encode(utterance(["w0"]), emb, cfg)


class TestForward:
    def test_valid_distribution(self):
        rng = np.random.default_rng(1)
        params = init_params(SMALL, rng)
        x = rng.normal(size=(3, 6, 8)).astype(np.float32)
        probs = forward(x, params, training=False)
        np.testing.assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-6)

    def test_inference_deterministic(self):
        rng = np.random.default_rng(2)
        params = init_params(SMALL, rng)
        x = rng.normal(size=(2, 6, 8)).astype(np.float32)
        a = forward(x, params, training=False).data
        b = forward(x, params, training=False).data
        assert np.array_equal(a, b)

    def test_all_zero_params_give_half_half(self):
        rng = np.random.default_rng(3)
        params = init_params(SMALL, rng)
        for t in params.trainable():
            t.data = np.zeros_like(t.data)
        x = rng.normal(size=(2, 6, 8)).astype(np.float32)
        probs = forward(x, params, training=False)
        np.testing.assert_allclose(probs.data, 0.5, atol=1e-7)


class TestTrain:
    def test_overfits_separable_toy(self):
        examples, emb = make_toy_corpus(n_examples=32, dim=8, seed=0)
        config = ModelConfig(embed_dim=8, filters=16, kernel=2, gru_units=8,
                             dropout_rate=0.3, max_epochs=200, patience=200,
                             batch_size=8, seed=1)
        params, history = train(examples, {"train": examples}, emb, config)
        preds = predict([ex.raw_text for ex in examples], params, emb,
                        medium="twitter")
        accuracy = np.mean([p.label == ex.label for p, ex in zip(preds, examples)])
        assert accuracy == 1.0
        assert len(history) <= 200

    def test_history_has_scores_and_respects_bound(self):
        examples, emb = make_toy_corpus(n_examples=16, dim=8, seed=2)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=4, patience=10, seed=0)
        params, history = train(examples, {"toy": examples}, emb, config)
        assert len(history) <= 4
        assert all("toy" in rec.test_scores for rec in history)
        assert 0 <= params.best_epoch < len(history)

    def test_empty_train_set_rejected(self, emb):
        with pytest.raises(ValueError):
            train([], None, emb, SMALL)

    def test_reproducible_with_seed(self):
        examples, emb = make_toy_corpus(n_examples=12, dim=8, seed=3)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=3, seed=42)
        params_a, hist_a = train(examples, None, emb, config)
        params_b, hist_b = train(examples, None, emb, config)
        for name, t in params_a.named_tensors().items():
            assert np.array_equal(t.data, params_b.named_tensors()[name].data)
        assert [h.train_loss for h in hist_a] == [h.train_loss for h in hist_b]

    def test_plateau_early_stop(self):
        examples, emb = make_toy_corpus(n_examples=8, dim=8, seed=4)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=50, patience=2, min_loss_delta=1e10, seed=0)
        _, history = train(examples, None, emb, config)
        # plateau counting starts at epoch 1 (epoch 0 has no previous loss)
        assert len(history) == 3


class TestPredict:
    def test_deterministic_and_confident(self):
        examples, emb = make_toy_corpus(n_examples=16, dim=8, seed=5)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=30, patience=30, seed=0)
        params, _ = train(examples, None, emb, config)
        texts = ["leave quit cancel", "love great happy"]
        a = predict(texts, params, emb)
        b = predict(texts, params, emb)
        assert [(p.label, p.confidence) for p in a] == \
               [(p.label, p.confidence) for p in b]
        for p in a:
            assert p.confidence >= 0.5
            assert p.label in (CHURN, NON_CHURN)

    def test_empty_input_list(self):
        examples, emb = make_toy_corpus(n_examples=8, dim=8, seed=6)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=2, seed=0)
        params, _ = train(examples, None, emb, config)
        assert predict([], params, emb) == []

    def test_attention_weights_exposed(self):
        examples, emb = make_toy_corpus(n_examples=8, dim=8, seed=7)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=2, seed=0)
        params, _ = train(examples, None, emb, config)
        (pred,) = predict(["leave quit cancel bye"], params, emb)
        assert pred.attention_weights is not None
        assert pred.attention_weights.sum() <= 1.0 + 1e-6


class TestCheckpoint:
    def _trained(self, seed=8):
        examples, emb = make_toy_corpus(n_examples=12, dim=8, seed=seed)
        config = ModelConfig(embed_dim=8, filters=4, kernel=2, gru_units=3,
                             max_epochs=3, seed=0)
        params, _ = train(examples, None, emb, config)
        return params, emb

    def test_round_trip_bit_identical(self, tmp_path):
        params, emb = self._trained()
        path = tmp_path / "model.chk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        rng = np.random.default_rng(9)
        texts = [" ".join(rng.choice(list(emb.vocab), size=4)) for _ in range(100)]
        before = predict(texts, params, emb)
        after = predict(texts, loaded, emb)
        assert [(p.label, p.confidence) for p in before] == \
               [(p.label, p.confidence) for p in after]

    def test_corrupted_magic(self, tmp_path):
        params, _ = self._trained()
        path = tmp_path / "model.chk"
        save_checkpoint(params, path)
        blob = bytearray(path.read_bytes())
        blob[:5] = b"JUNK!"
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        params, _ = self._trained()
        path = tmp_path / "model.chk"
        save_checkpoint(params, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_wrong_dim_embeddings_named_in_error(self, tmp_path):
        params, _ = self._trained()
        path = tmp_path / "model.chk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        rng = np.random.default_rng(10)
        wrong = WordEmbeddings("en", 5, {"leave": 0},
                               rng.normal(size=(1, 5)).astype(np.float32))
        with pytest.raises(DimensionMismatchError, match="5.*8"):
            predict(["leave"], loaded, wrong)
