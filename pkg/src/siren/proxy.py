"""Link-monitoring check service: score URLs and activate the honeypot on malicious verdicts."""

from __future__ import annotations

import csv
import json
import logging
import threading
import time
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from siren.dataset import UrlClass
from siren.errors import InvalidUrlError
from siren.features import extract_features
from siren.honeypot.control import ControlCommand, send_control
from siren.nn.io import load_model
from siren.nn.model import ModelParams, predict_proba

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
CSV_HEADER = ("url", "class", "p_benign", "p_defacement", "p_phishing", "p_malware", "action")


@dataclass(frozen=True)
class Verdict:
    url: str
    label: UrlClass
    probabilities: tuple[float, float, float, float]
    action: str  # allow | trap
    model_version: str

    def as_dict(self) -> dict:
        return {
            "url": self.url,
            "class": self.label.label,
            "probabilities": dict(zip((c.label for c in UrlClass), self.probabilities)),
            "action": self.action,
            "model_version": self.model_version,
        }

    def csv_row(self) -> list:
        return [self.url, self.label.label, *(f"{p:.6f}" for p in self.probabilities), self.action]


@dataclass(frozen=True)
class Unscorable:
    """The URL could not be turned into features; neither allow nor trap applies."""

    url: str
    reason: str
    model_version: str

    def as_dict(self) -> dict:
        return {"url": self.url, "outcome": "unscorable", "reason": self.reason,
                "model_version": self.model_version}


def decide(probabilities, threshold: float) -> tuple[UrlClass, str]:
    p = np.asarray(probabilities)
    label = UrlClass(int(np.argmax(p)))
    trap = label is not UrlClass.BENIGN and float(p[label]) >= threshold
    return label, "trap" if trap else "allow"


class Classifier:
    """Immutable after construction; safe to share across request threads."""

    def __init__(self, params: ModelParams, threshold: float = DEFAULT_THRESHOLD):
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        self.params = params
        self.threshold = threshold
        self.model_version = params.fingerprint()

    @classmethod
    def from_file(cls, path: str | Path, threshold: float = DEFAULT_THRESHOLD) -> "Classifier":
        return cls(load_model(path), threshold)

    def _verdict(self, url: str, probs: np.ndarray) -> Verdict:
        probs = probs.astype(np.float64)
        probs = probs / probs.sum()
        label, action = decide(probs, self.threshold)
        return Verdict(url, label, tuple(float(p) for p in probs), action, self.model_version)

    def _features(self, url: str) -> np.ndarray:
        if not isinstance(url, str) or not url.strip():
            raise InvalidUrlError("empty URL")
        return extract_features(url.strip())

    def classify_url(self, url: str) -> Verdict | Unscorable:
        try:
            x = self._features(url)
        except InvalidUrlError as exc:
            return Unscorable(url if isinstance(url, str) else repr(url), str(exc), self.model_version)
        return self._verdict(url, predict_proba(self.params, x[None, :])[0])

    def classify_many(self, urls: list[str]) -> list[Verdict | Unscorable]:
        """Row-wise forward passes: a verdict never depends on its batch neighbours."""
        return [self.classify_url(u) for u in urls]


class TriggerLog:
    """Local record of emitted activations."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.entries: list[dict] = []
        self._lock = threading.Lock()

    def record(self, entry: dict) -> None:
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry) + "\n")


def trigger_honeypot(verdict: Verdict, endpoint: tuple[str, int] | None,
                     log: TriggerLog | None = None) -> bool:
    """Send ``ACTIVATE <class>`` for a trap verdict. Never raises on network failure."""
    if endpoint is None or not isinstance(verdict, Verdict) or verdict.action != "trap":
        return False
    entry = {"time": time.time(), "url": verdict.url, "class": verdict.label.label,
             "endpoint": f"{endpoint[0]}:{endpoint[1]}"}
    try:
        send_control(endpoint[0], endpoint[1], ControlCommand("ACTIVATE", verdict.label.label))
        entry["sent"] = True
    except OSError as exc:
        logger.warning("honeypot trigger to %s:%s failed: %s", endpoint[0], endpoint[1], exc)
        entry["sent"] = False
        entry["error"] = str(exc)
    if log is not None:
        log.record(entry)
    return entry["sent"]


@dataclass
class BatchReport:
    rows: int
    skipped_blank: int
    unscorable: int


def batch_check(lines: Iterable[str], classifier: Classifier, out: TextIO,
                batch_size: int = 4096) -> BatchReport:
    """One CSV row per non-blank input line, in input order.

    Unscorable URLs get a row with class ``unscorable``, empty probabilities
    and action ``unscorable``. Blank lines are skipped and counted.
    """
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    rows = skipped = bad = 0
    pending: list[str] = []

    def flush():
        nonlocal rows, bad
        for v in classifier.classify_many(pending):
            if isinstance(v, Unscorable):
                bad += 1
                writer.writerow([v.url, "unscorable", "", "", "", "", "unscorable"])
            else:
                writer.writerow(v.csv_row())
            rows += 1
        pending.clear()

    for line in lines:
        url = line.rstrip("\r\n")
        if not url.strip():
            skipped += 1
            continue
        pending.append(url)
        if len(pending) >= batch_size:
            flush()
    flush()
    return BatchReport(rows, skipped, bad)


class _CheckHandler(BaseHTTPRequestHandler):
    server: "CheckServer"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path != "/v1/health":
            self._send(HTTPStatus.NOT_FOUND, {"error": "not found"})
            return
        srv = self.server
        self._send(HTTPStatus.OK, {"status": "ok", "model_version": srv.classifier.model_version,
                                   "uptime_seconds": round(time.monotonic() - srv.started, 3)})

    def do_POST(self):
        if self.path != "/v1/check":
            self._send(HTTPStatus.NOT_FOUND, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            length = -1
        if length < 0 or length > self.server.max_body:
            self._send(HTTPStatus.BAD_REQUEST, {"error": "bad Content-Length"})
            return
        try:
            body = json.loads(self.rfile.read(length) or b"null")
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._send(HTTPStatus.BAD_REQUEST, {"error": "body is not valid JSON"})
            return
        if not isinstance(body, dict) or not isinstance(body.get("url"), str):
            self._send(HTTPStatus.BAD_REQUEST, {"error": "body must be an object with a string 'url'"})
            return
        verdict = self.server.classifier.classify_url(body["url"])
        if isinstance(verdict, Unscorable):
            self._send(HTTPStatus.UNPROCESSABLE_ENTITY, verdict.as_dict())
            return
        self._send(HTTPStatus.OK, verdict.as_dict())
        trigger_honeypot(verdict, self.server.control_endpoint, self.server.trigger_log)


class CheckServer(ThreadingHTTPServer):
    daemon_threads = True
    max_body = 64 * 1024

    def __init__(self, address: tuple[str, int], classifier: Classifier,
                 control_endpoint: tuple[str, int] | None = None, trigger_log: TriggerLog | None = None):
        self.classifier = classifier
        self.control_endpoint = control_endpoint
        self.trigger_log = trigger_log or TriggerLog()
        self.started = time.monotonic()
        super().__init__(address, _CheckHandler)

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, kwargs={"poll_interval": 0.1},
                             name="siren-proxy", daemon=True)
        t.start()
        return t

    def close(self) -> None:
        self.shutdown()
        self.server_close()


def serve_http(classifier: Classifier, host: str = "127.0.0.1", port: int = 8080,
               control_endpoint: tuple[str, int] | None = None,
               trigger_log: TriggerLog | None = None) -> CheckServer:
    """Bind the check service; call ``serve_forever`` or ``start_background`` on the result."""
    return CheckServer((host, port), classifier, control_endpoint, trigger_log)
