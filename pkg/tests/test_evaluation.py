import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from churn_intent.datasets import CHURN, NON_CHURN
from churn_intent.evaluation import (
    EvalConfig,
    ExperimentSpec,
    SignificanceResult,
    aggregate,
    kfold_split,
    macro_prf,
    run_experiment,
    significance_test,
)
from churn_intent.model import ModelConfig
from churn_intent.synthetic import make_toy_corpus

from conftest import example


def brute_force_macro_prf(preds, golds, classes=(0, 1)):
    """Independent oracle: explicit confusion-matrix enumeration."""
    per_class = []
    for cls in classes:
        tp = fp = fn = 0
        for p, g in zip(preds, golds):
            if p == cls and g == cls:
                tp += 1
            elif p == cls:
                fp += 1
            elif g == cls:
                fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class.append((precision, recall, f1))
    return tuple(sum(vals) / len(classes) for vals in zip(*per_class))


class TestKFold:
    def test_4339_split(self):
        folds = kfold_split(list(range(4339)), 10, seed=0)
        sizes = sorted(len(f) for f in folds)
        assert sizes == [433] + [434] * 9

    def test_leave_one_out(self):
        folds = kfold_split(list(range(7)), 7, seed=0)
        assert all(len(f) == 1 for f in folds)

    def test_deterministic(self):
        data = list(range(50))
        assert kfold_split(data, 10, seed=3) == kfold_split(data, 10, seed=3)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            kfold_split([1, 2], 3)

    @given(st.integers(min_value=10, max_value=400), st.integers(min_value=0, max_value=5))
    @settings(max_examples=30)
    def test_partition_properties(self, n, seed):
        data = list(range(n))
        folds = kfold_split(data, 10, seed=seed)
        flat = [i for fold in folds for i in fold]
        assert sorted(flat) == data  # disjoint and covering
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1

    @given(st.integers(min_value=20, max_value=300), st.integers(min_value=0, max_value=5),
           st.floats(min_value=0.1, max_value=0.9))
    @settings(max_examples=30)
    def test_stratified_ratio(self, n, seed, churn_ratio):
        rng = np.random.default_rng(seed)
        data = [example(id=str(i),
                        label=CHURN if rng.random() < churn_ratio else NON_CHURN)
                for i in range(n)]
        folds = kfold_split(data, 10, seed=seed, stratified=True)
        flat = sorted(i for fold in folds for i in fold)
        assert flat == list(range(n))
        per_fold_churn = [sum(1 for i in fold if data[i].label == CHURN)
                          for fold in folds]
        assert max(per_fold_churn) - min(per_fold_churn) <= 1
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1


class TestMacroPRF:
    def test_all_correct(self):
        assert macro_prf([0, 1, 0], [0, 1, 0]) == (1.0, 1.0, 1.0)

    def test_hand_example(self):
        # churn: TP=3 FP=1 FN=1; non-churn: TN=5
        preds = [0] * 3 + [0] + [1] + [1] * 5
        golds = [0] * 3 + [1] + [0] + [1] * 5
        p, r, f1 = macro_prf(preds, golds)
        assert abs(f1 - (0.75 + 5 / 6) / 2) < 1e-12
        assert abs(f1 - 0.7917) < 5e-5

    def test_all_wrong(self):
        assert macro_prf([1, 0], [0, 1]) == (0.0, 0.0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            macro_prf([0], [0, 1])

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 40))
            preds = rng.integers(0, 2, size=n).tolist()
            golds = rng.integers(0, 2, size=n).tolist()
            mine = macro_prf(preds, golds)
            oracle = brute_force_macro_prf(preds, golds)
            assert max(abs(a - b) for a, b in zip(mine, oracle)) <= 1e-12

    def test_symmetric_under_relabeling(self):
        rng = np.random.default_rng(1)
        preds = rng.integers(0, 2, size=60).tolist()
        golds = rng.integers(0, 2, size=60).tolist()
        flipped = macro_prf([1 - p for p in preds], [1 - g for g in golds])
        assert macro_prf(preds, golds) == pytest.approx(flipped, abs=1e-12)


class TestAggregate:
    def test_spec_example(self):
        assert aggregate([80.0, 90.0]) == (85.0, 5.0)

    def test_single_fold(self):
        assert aggregate([0.7]).std == 0.0

    def test_constant_folds(self):
        assert aggregate([0.5] * 10).std == 0.0

    def test_mean_within_range(self):
        rng = np.random.default_rng(2)
        scores = rng.random(10).tolist()
        ms = aggregate(scores)
        assert min(scores) <= ms.mean <= max(scores)


class TestSignificance:
    def test_identical_lists_retain(self):
        result = significance_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert not result.reject
        assert result.p_value == 1.0

    def test_constant_shift_degenerate_reject(self):
        a = [1.0, 2.0, 3.0]
        b = [11.0, 12.0, 13.0]
        result = significance_test(a, b)
        assert result.reject and result.degenerate and result.p_value == 0.0

    def test_unequal_lengths(self):
        with pytest.raises(ValueError):
            significance_test([1.0], [1.0, 2.0])

    def test_monte_carlo_calibration(self):
        # b ~ a + N(2, 0.5): the improvement is real and must be detected
        rng = np.random.default_rng(3)
        rejections = 0
        trials = 1000
        for _ in range(trials):
            a = rng.normal(70.0, 3.0, size=20)
            b = a + rng.normal(2.0, 0.5, size=20)
            if significance_test(a.tolist(), b.tolist(), alpha=0.05).reject:
                rejections += 1
        assert rejections / trials >= 0.95

    def test_null_calibration(self):
        # no effect: rejection rate should be near alpha, not above ~2x
        rng = np.random.default_rng(4)
        rejections = sum(
            significance_test(rng.normal(size=20).tolist(),
                              rng.normal(size=20).tolist()).reject
            for _ in range(500)
        )
        assert rejections / 500 < 0.1

    def test_wilcoxon_option(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=20)
        b = a + 1.0 + rng.normal(0, 0.1, size=20)
        result = significance_test(a.tolist(), b.tolist(), method="wilcoxon")
        assert isinstance(result, SignificanceResult)
        assert result.reject


def small_spec(examples, emb, mode="cv", test=None, **kw):
    return ExperimentSpec(
        train={"en": examples},
        test=test,
        embeddings=emb,
        model=ModelConfig(embed_dim=emb.dim, filters=4, kernel=2, gru_units=3,
                          max_epochs=3, seed=0),
        mode=mode,
        augment_train=False,
        **kw,
    )


class TestRunExperiment:
    def test_cv_report_shape(self):
        examples, emb = make_toy_corpus(n_examples=30, dim=8, seed=0)
        report = run_experiment(small_spec(examples, emb),
                                EvalConfig(folds=3, runs=2, seed=0))
        rep = report.languages["en"]
        assert len(rep.fold_scores) == 6  # runs x folds
        assert len(rep.run_means) == 2
        assert 0.0 <= rep.f1.mean <= 1.0
        assert rep.f1.std >= 0.0

    def test_reproducible(self):
        examples, emb = make_toy_corpus(n_examples=24, dim=8, seed=1)
        cfg = EvalConfig(folds=3, runs=1, seed=7)
        a = run_experiment(small_spec(examples, emb), cfg)
        b = run_experiment(small_spec(examples, emb), cfg)
        assert a.to_json() == b.to_json()

    def test_transfer_mode(self):
        examples, emb = make_toy_corpus(n_examples=24, dim=8, seed=2)
        test_corpus, _ = make_toy_corpus(n_examples=10, dim=8, seed=3)
        report = run_experiment(
            small_spec(examples, emb, mode="transfer", test={"en": test_corpus}),
            EvalConfig(folds=2, runs=2, seed=0),
        )
        assert len(report.languages["en"].fold_scores) == 2  # one per run
        assert report.folds == 1

    def test_checkpoints_written(self, tmp_path):
        examples, emb = make_toy_corpus(n_examples=20, dim=8, seed=4)
        spec = small_spec(examples, emb)
        spec.checkpoint_dir = str(tmp_path / "chk")
        run_experiment(spec, EvalConfig(folds=2, runs=1, seed=0))
        assert len(list((tmp_path / "chk").glob("*.chk"))) == 2
