"""HTTP annotation service for the data-collection game: predict on user
text, collect approve/disapprove feedback, route records by detected
language, and persist them to an append-only store.

Endpoints (JSON over HTTP): POST /predict, POST /feedback, POST /review,
GET /records, GET /stats, GET /health. The store keeps one line-delimited
JSON event file per language; review never rewrites feedback lines, it
appends status events. All writes funnel through one lock.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import asdict, dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Mapping
from urllib.parse import parse_qs, urlparse

from .datasets import CHURN, LABELS, LANGUAGES, NON_CHURN, LabeledExample, save_dataset
from .model import Prediction
from .resources import default_stopwords
from .textprep import tokenize

logger = logging.getLogger(__name__)

APPROVE = "approve"
DISAPPROVE = "disapprove"
VERDICTS = (APPROVE, DISAPPROVE)

PENDING = "pending"
CONFIRMED = "confirmed"
REJECTED = "rejected"


class AlreadyReviewedError(ValueError):
    """Record review was attempted twice."""


@dataclass(frozen=True)
class LanguageGuess:
    language: str
    score: float
    low_confidence: bool = False

    def __post_init__(self) -> None:
        if self.score < 0.5:
            raise ValueError("returned language must have score >= 0.5")


def detect_language(text: str) -> LanguageGuess:
    """Stopword-overlap classifier over the shipped EN/DE lists.

    Ties (including texts with no stopwords at all) resolve to English with
    score 0.5, flagged low-confidence.
    """
    if not text or not text.strip():
        raise ValueError("empty text")
    tokens = tokenize(text)
    hits = {lang: 0 for lang in LANGUAGES}
    for lang in LANGUAGES:
        stop = default_stopwords(lang)
        hits[lang] = sum(1 for tok in tokens if tok in stop)
    total = sum(hits.values())
    if total == 0:
        return LanguageGuess(language="en", score=0.5, low_confidence=True)
    best = max(LANGUAGES, key=lambda lang: (hits[lang], lang == "en"))
    score = hits[best] / total
    return LanguageGuess(language=best, score=score, low_confidence=score == 0.5)


@dataclass(frozen=True)
class FeedbackRecord:
    id: str
    text: str
    predicted_label: str
    predicted_confidence: float
    user_verdict: str
    derived_label: str
    language: str
    timestamp: float
    review_status: str = PENDING


def derive_label(predicted_label: str, verdict: str) -> str:
    """Approve keeps the prediction; disapprove flips it."""
    if verdict == APPROVE:
        return predicted_label
    if verdict == DISAPPROVE:
        return NON_CHURN if predicted_label == CHURN else CHURN
    raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")


class FeedbackStore:
    """Append-only per-language event log with an in-memory index.

    Events are JSON lines: kind "feedback" carries a full record, kind
    "review" carries {id, reviewer_label, status}. State is reconstructed
    by replaying the log; a single lock serializes all appends.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, FeedbackRecord] = {}
        self._replay()

    def _path(self, language: str) -> Path:
        return self.root / f"feedback_{language}.jsonl"

    def _replay(self) -> None:
        for language in LANGUAGES:
            path = self._path(language)
            if not path.exists():
                continue
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["kind"] == "feedback":
                        payload = {k: v for k, v in event.items() if k != "kind"}
                        record = FeedbackRecord(**payload)
                        self._records[record.id] = record
                    elif event["kind"] == "review":
                        old = self._records[event["id"]]
                        self._records[event["id"]] = replace(
                            old, review_status=event["status"]
                        )

    def _append(self, language: str, event: dict) -> None:
        with open(self._path(language), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def add_feedback(
        self,
        text: str,
        predicted_label: str,
        verdict: str,
        language: str,
        predicted_confidence: float = 1.0,
    ) -> FeedbackRecord:
        if predicted_label not in LABELS:
            raise ValueError(f"predicted_label must be one of {LABELS}")
        if language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}")
        record = FeedbackRecord(
            id=uuid.uuid4().hex[:16],
            text=text,
            predicted_label=predicted_label,
            predicted_confidence=float(predicted_confidence),
            user_verdict=verdict,
            derived_label=derive_label(predicted_label, verdict),
            language=language,
            timestamp=time.time(),
        )
        with self._lock:
            self._append(language, {"kind": "feedback", **asdict(record)})
            self._records[record.id] = record
        return record

    def review(self, record_id: str, reviewer_label: str) -> FeedbackRecord:
        """Confirm when the reviewer agrees with the derived label, reject
        otherwise. Only pending records are reviewable."""
        if reviewer_label not in LABELS:
            raise ValueError(f"reviewer_label must be one of {LABELS}")
        with self._lock:
            record = self._records.get(record_id)
            if record is None:
                raise KeyError(record_id)
            if record.review_status != PENDING:
                raise AlreadyReviewedError(
                    f"record {record_id} already {record.review_status}"
                )
            status = CONFIRMED if reviewer_label == record.derived_label else REJECTED
            updated = replace(record, review_status=status)
            self._append(record.language, {
                "kind": "review", "id": record_id,
                "reviewer_label": reviewer_label, "status": status,
            })
            self._records[record_id] = updated
        return updated

    def records(self, status: str | None = None) -> list[FeedbackRecord]:
        with self._lock:
            out = sorted(self._records.values(), key=lambda r: r.timestamp)
        if status is not None:
            out = [r for r in out if r.review_status == status]
        return out

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def stats(self) -> dict:
        """Per-language churn/non-churn counts of confirmed records, plus the
        running totals the game UI displays."""
        counts = {lang: {CHURN: 0, NON_CHURN: 0} for lang in LANGUAGES}
        pending = rejected = 0
        for record in self.records():
            if record.review_status == CONFIRMED:
                counts[record.language][record.derived_label] += 1
            elif record.review_status == PENDING:
                pending += 1
            else:
                rejected += 1
        confirmed = sum(sum(v.values()) for v in counts.values())
        churny = sum(v[CHURN] for v in counts.values())
        return {
            "languages": counts,
            "confirmed": confirmed,
            "pending": pending,
            "rejected": rejected,
            "churn_ratio": churny / confirmed if confirmed else 0.0,
        }

    def export_csv(self, path: str | Path) -> int:
        """Write confirmed records in the dataset CSV schema."""
        rows = [
            LabeledExample(
                id=r.id,
                raw_text=r.text,
                source_brand=None,
                label=r.derived_label,
                confidence=1.0,
                language=r.language,
                medium="chatbot",
            )
            for r in self.records(status=CONFIRMED)
        ]
        return save_dataset(rows, path)


Predictor = Callable[[str], Prediction]


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        store: FeedbackStore,
        predictors: Mapping[str, Predictor] | None = None,
        ui_dir: str | Path | None = None,
    ):
        super().__init__(address, _Handler)
        self.store = store
        self.predictors = dict(predictors or {})
        self.ui_dir = Path(ui_dir) if ui_dir else None

    @property
    def port(self) -> int:
        return self.server_address[1]


class _Handler(BaseHTTPRequestHandler):
    server: AnnotationServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ValueError(f"invalid JSON body: {exc}") from exc
        if not isinstance(parsed, dict):
            raise ValueError("JSON body must be an object")
        return parsed

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path == "/health":
            self._send_json(200, {"status": "ok"})
        elif parsed.path == "/stats":
            self._send_json(200, self.server.store.stats())
        elif parsed.path == "/records":
            status = parse_qs(parsed.query).get("status", [None])[0]
            records = [asdict(r) for r in self.server.store.records(status=status)]
            self._send_json(200, {"records": records})
        elif self.server.ui_dir is not None:
            self._serve_static(parsed.path)
        else:
            self._send_json(404, {"error": f"unknown path {parsed.path}"})

    def do_POST(self) -> None:
        try:
            body = self._body()
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        if self.path == "/predict":
            self._handle_predict(body)
        elif self.path == "/feedback":
            self._handle_feedback(body)
        elif self.path == "/review":
            self._handle_review(body)
        else:
            self._send_json(404, {"error": f"unknown path {self.path}"})

    def _resolve_language(self, body: dict) -> tuple[str, LanguageGuess | None]:
        language = body.get("language")
        if language is not None:
            if language not in LANGUAGES:
                raise ValueError(f"language must be one of {LANGUAGES}")
            return language, None
        guess = detect_language(body["text"])
        return guess.language, guess

    def _handle_predict(self, body: dict) -> None:
        text = (body.get("text") or "").strip()
        if not text:
            self._send_json(400, {"error": "text must be nonempty"})
            return
        try:
            language, guess = self._resolve_language({**body, "text": text})
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        predictor = self.server.predictors.get(language)
        if predictor is None:
            self._send_json(503, {"error": f"no model loaded for language {language!r}"})
            return
        try:
            prediction = predictor(text)
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        payload = {
            "label": prediction.label,
            "confidence": prediction.confidence,
            "language": language,
        }
        if guess is not None and guess.low_confidence:
            payload["language_low_confidence"] = True
        self._send_json(200, payload)

    def _handle_feedback(self, body: dict) -> None:
        text = (body.get("text") or "").strip()
        if not text:
            self._send_json(400, {"error": "text must be nonempty"})
            return
        verdict = body.get("verdict")
        if verdict not in VERDICTS:
            self._send_json(400, {"error": f"verdict must be one of {VERDICTS}"})
            return
        try:
            language, _ = self._resolve_language({**body, "text": text})
            record = self.server.store.add_feedback(
                text=text,
                predicted_label=body.get("predicted_label", ""),
                verdict=verdict,
                language=language,
                predicted_confidence=float(body.get("predicted_confidence", 1.0)),
            )
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, asdict(record))

    def _handle_review(self, body: dict) -> None:
        record_id = body.get("id")
        if not record_id:
            self._send_json(400, {"error": "id is required"})
            return
        try:
            record = self.server.store.review(record_id, body.get("reviewer_label", ""))
        except KeyError:
            self._send_json(404, {"error": f"no record with id {record_id!r}"})
            return
        except AlreadyReviewedError as exc:
            self._send_json(409, {"error": str(exc)})
            return
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, asdict(record))

    def _serve_static(self, path: str) -> None:
        name = path.lstrip("/") or "index.html"
        target = (self.server.ui_dir / name).resolve()
        if not str(target).startswith(str(self.server.ui_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"unknown path {path}"})
            return
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
                 ".map": "application/json"}
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)


def create_server(
    store: FeedbackStore,
    predictors: Mapping[str, Predictor] | None = None,
    host: str = "127.0.0.1",
    port: int = 8080,
    ui_dir: str | Path | None = None,
) -> AnnotationServer:
    """Bind the annotation service (port 0 picks an ephemeral port)."""
    return AnnotationServer((host, port), store, predictors, ui_dir)
