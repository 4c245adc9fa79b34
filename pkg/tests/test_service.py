import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from churn_intent.datasets import CHURN, NON_CHURN, load_dataset
from churn_intent.model import Prediction
from churn_intent.service import (
    AlreadyReviewedError,
    FeedbackStore,
    create_server,
    derive_label,
    detect_language,
)


class TestDetectLanguage:
    def test_german(self):
        guess = detect_language("ich will meinen vertrag kündigen")
        assert guess.language == "de"
        assert guess.score > 0.5

    def test_english(self):
        guess = detect_language("i want to cancel my contract")
        assert guess.language == "en"
        assert guess.score > 0.5

    def test_no_stopwords_ties_to_english(self):
        guess = detect_language("ok")
        assert guess.language == "en"
        assert guess.score == 0.5
        assert guess.low_confidence

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            detect_language("   ")


class TestDeriveLabel:
    def test_approve_keeps(self):
        assert derive_label(CHURN, "approve") == CHURN
        assert derive_label(NON_CHURN, "approve") == NON_CHURN

    def test_disapprove_flips(self):
        assert derive_label(CHURN, "disapprove") == NON_CHURN
        assert derive_label(NON_CHURN, "disapprove") == CHURN

    def test_unknown_verdict(self):
        with pytest.raises(ValueError):
            derive_label(CHURN, "maybe")


class TestStore:
    def test_add_and_replay(self, tmp_path):
        store = FeedbackStore(tmp_path)
        rec = store.add_feedback("ich gehe zur konkurrenz", CHURN, "approve", "de")
        assert rec.derived_label == CHURN
        assert rec.review_status == "pending"
        reloaded = FeedbackStore(tmp_path)
        assert len(reloaded) == 1
        assert reloaded.records()[0] == rec

    def test_review_confirm_and_reject(self, tmp_path):
        store = FeedbackStore(tmp_path)
        a = store.add_feedback("bye", CHURN, "approve", "en")
        b = store.add_feedback("hello", CHURN, "disapprove", "en")
        assert store.review(a.id, CHURN).review_status == "confirmed"
        assert store.review(b.id, CHURN).review_status == "rejected"

    def test_review_unknown_id(self, tmp_path):
        with pytest.raises(KeyError):
            FeedbackStore(tmp_path).review("nope", CHURN)

    def test_double_review_rejected(self, tmp_path):
        store = FeedbackStore(tmp_path)
        rec = store.add_feedback("bye", CHURN, "approve", "en")
        store.review(rec.id, CHURN)
        with pytest.raises(AlreadyReviewedError):
            store.review(rec.id, CHURN)

    def test_review_survives_replay(self, tmp_path):
        store = FeedbackStore(tmp_path)
        rec = store.add_feedback("bye", CHURN, "approve", "en")
        store.review(rec.id, CHURN)
        reloaded = FeedbackStore(tmp_path)
        assert reloaded.records()[0].review_status == "confirmed"

    def test_export_only_confirmed(self, tmp_path):
        store = FeedbackStore(tmp_path / "store")
        confirmed = [store.add_feedback(f"text {i}", CHURN, "approve", "en")
                     for i in range(5)]
        pending = [store.add_feedback(f"pending {i}", CHURN, "approve", "de")
                   for i in range(3)]
        rejected = [store.add_feedback(f"bad {i}", CHURN, "disapprove", "en")
                    for i in range(2)]
        for rec in confirmed:
            store.review(rec.id, rec.derived_label)
        for rec in rejected:
            store.review(rec.id, CHURN)  # derived was NON_CHURN -> rejected
        out = tmp_path / "export.csv"
        assert store.export_csv(out) == 5
        rows = load_dataset(out)
        assert len(rows) == 5
        assert all(ex.medium == "chatbot" for ex in rows)

    def test_stats_match_export(self, tmp_path):
        from churn_intent.datasets import stats as dataset_stats

        store = FeedbackStore(tmp_path / "store")
        for i in range(4):
            rec = store.add_feedback(f"churny {i}", CHURN, "approve",
                                     "en" if i % 2 else "de")
            store.review(rec.id, CHURN)
        rec = store.add_feedback("fine", CHURN, "disapprove", "en")
        store.review(rec.id, NON_CHURN)
        out = tmp_path / "export.csv"
        store.export_csv(out)
        table = store.stats()
        csv_stats = dataset_stats(load_dataset(out))
        for lang in ("en", "de"):
            churn = table["languages"][lang][CHURN]
            non = table["languages"][lang][NON_CHURN]
            assert csv_stats.language_counts.get(lang, (0, 0)) == (churn, non)

    def test_store_files_append_only_events(self, tmp_path):
        store = FeedbackStore(tmp_path)
        rec = store.add_feedback("bye bye", CHURN, "approve", "en")
        store.review(rec.id, CHURN)
        lines = (tmp_path / "feedback_en.jsonl").read_text().splitlines()
        kinds = [json.loads(line)["kind"] for line in lines]
        assert kinds == ["feedback", "review"]


def fake_predictor(label=CHURN, confidence=0.87):
    def run(text: str) -> Prediction:
        return Prediction(label=label, confidence=confidence)
    return run


@pytest.fixture
def server(tmp_path):
    store = FeedbackStore(tmp_path / "store")
    srv = create_server(store, {"en": fake_predictor(), "de": fake_predictor()},
                        port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def call(srv, path, payload=None, method=None):
    url = f"http://127.0.0.1:{srv.port}{path}"
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode())


class TestHTTP:
    def test_health_before_first_prediction(self, server):
        status, body = call(server, "/health")
        assert status == 200
        assert body["status"] == "ok"

    def test_predict_detects_language(self, server):
        status, body = call(server, "/predict",
                            {"text": "ich will meinen vertrag kündigen"})
        assert status == 200
        assert body["language"] == "de"
        assert body["label"] == CHURN
        assert body["confidence"] >= 0.5

    def test_predict_explicit_language_overrides(self, server):
        status, body = call(server, "/predict",
                            {"text": "ich will meinen vertrag kündigen",
                             "language": "en"})
        assert status == 200
        assert body["language"] == "en"

    def test_predict_empty_text_400(self, server):
        status, _ = call(server, "/predict", {"text": "  "})
        assert status == 400

    def test_predict_deterministic(self, server):
        a = call(server, "/predict", {"text": "i want to leave"})
        b = call(server, "/predict", {"text": "i want to leave"})
        assert a == b

    def test_feedback_approve_and_disapprove(self, server):
        status, rec = call(server, "/feedback",
                           {"text": "i want to leave you", "predicted_label": CHURN,
                            "verdict": "approve"})
        assert status == 200
        assert rec["derived_label"] == CHURN
        status, rec = call(server, "/feedback",
                           {"text": "i love this service", "predicted_label": CHURN,
                            "verdict": "disapprove"})
        assert status == 200
        assert rec["derived_label"] == NON_CHURN
        assert rec["review_status"] == "pending"

    def test_feedback_unknown_verdict_400(self, server):
        status, _ = call(server, "/feedback",
                         {"text": "x y z", "predicted_label": CHURN,
                          "verdict": "shrug"})
        assert status == 400

    def test_review_flow(self, server):
        _, rec = call(server, "/feedback",
                      {"text": "i want out of my contract",
                       "predicted_label": CHURN, "verdict": "approve"})
        status, updated = call(server, "/review",
                               {"id": rec["id"], "reviewer_label": CHURN})
        assert status == 200
        assert updated["review_status"] == "confirmed"
        status, _ = call(server, "/review",
                         {"id": rec["id"], "reviewer_label": CHURN})
        assert status == 409
        status, _ = call(server, "/review",
                         {"id": "missing", "reviewer_label": CHURN})
        assert status == 404

    def test_records_endpoint_filters(self, server):
        call(server, "/feedback", {"text": "leaving now for good",
                                   "predicted_label": CHURN, "verdict": "approve"})
        status, body = call(server, "/records?status=pending")
        assert status == 200
        assert all(r["review_status"] == "pending" for r in body["records"])
        assert len(body["records"]) >= 1

    def test_stats_endpoint(self, server):
        _, rec = call(server, "/feedback",
                      {"text": "i will switch provider tomorrow",
                       "predicted_label": CHURN, "verdict": "approve"})
        call(server, "/review", {"id": rec["id"], "reviewer_label": CHURN})
        status, body = call(server, "/stats")
        assert status == 200
        assert body["languages"]["en"][CHURN] >= 1
        assert "churn_ratio" in body

    def test_unknown_path_404(self, server):
        status, _ = call(server, "/nope")
        assert status == 404

    def test_503_when_no_model(self, tmp_path):
        store = FeedbackStore(tmp_path / "s2")
        srv = create_server(store, {}, port=0)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        try:
            status, _ = call(srv, "/predict", {"text": "i want to leave"})
            assert status == 503
        finally:
            srv.shutdown()
            srv.server_close()

    def test_concurrent_feedback_no_lost_writes(self, server):
        def post(i):
            status, rec = call(server, "/feedback",
                               {"text": f"message number {i} i want out",
                                "predicted_label": CHURN, "verdict": "approve",
                                "language": "en"})
            assert status == 200
            return rec["id"]

        with ThreadPoolExecutor(max_workers=32) as pool:
            ids = list(pool.map(post, range(100)))
        assert len(set(ids)) == 100
        assert len(server.store) == 100
        path = server.store.root / "feedback_en.jsonl"
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert sum(1 for e in lines if e["kind"] == "feedback") == 100
