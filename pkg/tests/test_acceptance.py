"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Criteria 1, 2 and 5 need the public malicious-URL corpus (url,type CSV with
about 651k rows). Point ``SIREN_CORPUS`` at it, or place it at
``data/malicious_phish.csv``; without it those criteria fail.

Run with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import http.client
import itertools
import json
import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from gradcheck import gradient_check
from harness import CapturingSocket, Mainframe, ShellClient, bound_udp, wait_for
from siren.crypto.primes import nearest_prime
from siren.crypto.rsa import decrypt, encrypt, encrypt_blob, generate_keypair
from siren.crypto.weather import FixtureProvider
from siren.dataset import N_CLASSES, load_csv, stratified_split, stratified_subsample, vectorize
from siren.honeypot.server import Honeypot, HoneypotConfig
from siren.honeypot.shell import Staller, read_file_stalled
from siren.honeypot.vfs import VirtualFs
from siren.nn import TrainConfig, evaluate, load_model, save_model, train
from siren.nn import ops
from siren.nn.model import init_params, predict_proba
from siren.proxy import Classifier, serve_http
from synth import malware

ROOT = Path(__file__).resolve().parents[1]
SUBSAMPLE = 100_000
SEED = 2024
PROTECTED = "/home/admin/secrets/passwords.txt"
UNPROTECTED = "/home/admin/notes.txt"


@pytest.fixture
def check(capsys):
    """``check(criterion, ok, detail)`` prints the gate line, then asserts."""

    def _check(criterion: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        assert ok, f"{criterion}: {detail}"

    return _check


def corpus_path() -> Path | None:
    p = Path(os.environ.get("SIREN_CORPUS", ROOT / "data" / "malicious_phish.csv"))
    return p if p.is_file() else None


@pytest.fixture(scope="module")
def corpus():
    path = corpus_path()
    return load_csv(path) if path else None


@pytest.fixture(scope="module")
def scaled_run(corpus):
    if corpus is None:
        return None
    records = list(corpus.records)
    records = [records[i] for i in stratified_subsample(records, SUBSAMPLE, SEED)]
    data = vectorize(records)
    split = stratified_split(data.labels, seed=SEED)
    t0 = time.perf_counter()
    res = train(data.X[split.train], data.Y[split.train], data.X[split.validation], data.Y[split.validation],
                TrainConfig(max_epochs=30, seed=SEED))
    elapsed = time.perf_counter() - t0
    metrics = {name: evaluate(res.params, data.X[idx], data.Y[idx])
               for name, idx in (("train", split.train), ("validation", split.validation), ("test", split.test))}
    return metrics, len(res.history), elapsed


def _no_corpus(check, criterion):
    check(criterion, False, "corpus not found; set SIREN_CORPUS to the url,type CSV")


def test_ac01_scaled_metrics(check, scaled_run):
    name = "AC-01 scaled reference metrics (test acc >= 0.90, weighted recall >= 0.90)"
    if scaled_run is None:
        _no_corpus(check, name)
    metrics, epochs, elapsed = scaled_run
    t = metrics["test"]
    check(name, t.accuracy >= 0.90 and t.recall_weighted >= 0.90 and epochs <= 30,
          f"acc {t.accuracy:.4f}, recall {t.recall_weighted:.4f}, precision {t.precision_weighted:.4f}, "
          f"loss {t.loss:.4f}, {epochs} epochs, {elapsed:.0f} s")


def test_ac02_overfitting_bound(check, scaled_run):
    name = "AC-02 overfitting bound (|train - val acc| <= 0.03)"
    if scaled_run is None:
        _no_corpus(check, name)
    metrics = scaled_run[0]
    gap = abs(metrics["train"].accuracy - metrics["validation"].accuracy)
    check(name, gap <= 0.03,
          f"acc gap {gap:.4f}, recall gap {abs(metrics['train'].recall_weighted - metrics['validation'].recall_weighted):.4f}, "
          f"loss gap {abs(metrics['train'].loss - metrics['validation'].loss):.4f}")


def test_ac03_gradient_check(check):
    t0 = time.perf_counter()
    report = gradient_check(seed=0, batch=16)
    elapsed = time.perf_counter() - t0
    worst = max(max(r["entry_rel_err"], r["direction_rel_err"]) for r in report.values())
    check("AC-03 gradient correctness (rel err < 1e-4, < 60 s)", worst < 1e-4 and elapsed < 60,
          f"{len(report)} tensors, worst rel err {worst:.2e}, {elapsed:.1f} s")


def test_ac04_selu_softmax(check):
    s = ops.selu(np.array([1.0, -1.0]))
    rng = np.random.default_rng(0)
    p = ops.softmax(rng.normal(0, 5, (256, 4)))
    loss = ops.softmax_xent(np.zeros((8, 4)), np.eye(4)[rng.integers(0, 4, 8)])[0]
    errs = (abs(s[0] - 1.0507009873554805), abs(s[1] + 1.1113307378125628))
    row_err = float(np.abs(p.sum(axis=1) - 1).max())
    check("AC-04 SELU/softmax numerics",
          max(errs) <= 1e-9 and row_err <= 1e-6 and abs(loss - math.log(4)) <= 1e-9,
          f"selu(1) {s[0]:.12f}, selu(-1) {s[1]:.12f}, max row-sum err {row_err:.1e}, "
          f"uniform loss - ln 4 = {loss - math.log(4):.1e}")


def test_ac05_split_stratification(check, corpus):
    name = "AC-05 split stratification (within 0.5 pp, deterministic)"
    if corpus is None:
        _no_corpus(check, name)
    labels = corpus.labels
    split = stratified_split(labels, seed=SEED)
    again = stratified_split(labels, seed=SEED)
    glob = np.bincount(labels, minlength=N_CLASSES) / len(labels)
    worst = 0.0
    for part in (split.train, split.test, split.validation):
        frac = np.bincount(labels[part], minlength=N_CLASSES) / len(part)
        worst = max(worst, float(np.abs(frac - glob).max()) * 100)
    same = all(np.array_equal(a, b) for a, b in zip((split.train, split.test, split.validation),
                                                      (again.train, again.test, again.validation)))
    check(name, worst <= 0.5 and same, f"{len(labels)} records, worst deviation {worst:.4f} pp, deterministic {same}")


def _nearest_prime_oracle(limit: int) -> np.ndarray:
    n = limit + 200
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, int(n**0.5) + 1):
        if is_p[i]:
            is_p[i * i::i] = False
    idx = np.arange(n + 1)
    prev = np.maximum.accumulate(np.where(is_p, idx, -1))
    nxt = np.minimum.accumulate(np.where(is_p, idx, 2 * n)[::-1])[::-1]
    v = np.arange(limit + 1)
    out = np.where(nxt[v] - v <= v - prev[v], nxt[v], prev[v])
    out[:3] = 2
    return out


def test_ac06_rsa_correctness(check):
    t0 = time.perf_counter()
    provider = FixtureProvider.default()
    msg_rng = random.Random(6)
    bad_round_trips = bad_inverse = 0
    for seed in range(50):
        k = generate_keypair(provider, random.Random(seed))
        bad_inverse += (k.e * k.d) % k.phi != 1
        for _ in range(1000):
            m = msg_rng.randrange(k.n)
            bad_round_trips += decrypt(encrypt(m, k.e, k.n), k.d, k.n) != m
    expected = _nearest_prime_oracle(10**6)
    mismatches = sum(nearest_prime(v) != e for v, e in enumerate(expected.tolist()))
    elapsed = time.perf_counter() - t0
    check("AC-06 RSA correctness (50 keys x 1000 msgs, e*d mod phi, nearest_prime <= 1e6, < 120 s)",
          bad_round_trips == 0 and bad_inverse == 0 and mismatches == 0 and elapsed < 120,
          f"round-trip failures {bad_round_trips}, inverse failures {bad_inverse}, "
          f"nearest_prime mismatches {mismatches}, {elapsed:.1f} s")


def test_ac07_probabilistic_encryption(check):
    provider = FixtureProvider.default()
    keys = [generate_keypair(provider, random.Random(1000 + s)) for s in range(50)]
    moduli = {k.n for k in keys}
    by_n = {k.n: k for k in keys}
    plaintext = b"quarterly-payroll.xlsx"
    ciphertexts = [tuple(encrypt_blob(plaintext, k)) for k in by_n.values()]
    pairwise = all(a != b for a, b in itertools.combinations(ciphertexts, 2))
    check("AC-07 probabilistic encryption (>= 45 distinct moduli of 50, distinct ciphertexts)",
          len(moduli) >= 45 and pairwise,
          f"{len(moduli)} distinct moduli, {len(ciphertexts)} ciphertexts pairwise distinct {pairwise}")


def test_ac08_one_way_channel(check, tmp_path):
    capture = CapturingSocket(bound_udp())
    mainframe = Mainframe()
    with Honeypot(HoneypotConfig(port=0, log_dir=str(tmp_path)), control_sock=capture) as hp:
        client = ShellClient(hp.shell_address)
        for line in ("ls", "cd secrets", "cat passwords.txt", "whoami"):
            client.cmd(line)
        mainframe.send(hp.control_address, "ENCRYPT_ALL\n")
        mainframe.send(hp.control_address, "ROTATE_KEYS\n")
        applied = wait_for(lambda: len(hp.control_log.events) == 2, 3)
        client.cmd("cat ../notes.txt")
        client.exit()
        wait_for(lambda: all(s.disconnected for s in hp.sessions.values()), 3)
    replies = mainframe.replies()
    mainframe.close()
    check("AC-08 one-way control channel (0 bytes sent by honeypot)",
          applied and len(capture.sent) == 0 and capture.send_calls == 0 and replies == b"",
          f"commands applied {applied}, send calls {capture.send_calls}, bytes sent {len(capture.sent)}, "
          f"bytes received by mainframe {len(replies)}")


def test_ac09_stalling(check):
    fs = VirtualFs.from_seed_file()
    staller = Staller(seed=9)
    reads = [read_file_stalled(fs, PROTECTED, staller) for _ in range(20)]
    distinct = len(set(reads))
    plain = read_file_stalled(fs, UNPROTECTED, staller)
    expected = fs.get(UNPROTECTED).content.decode()
    check("AC-09 stalling (20 distinct renderings, plaintext for unprotected)",
          distinct == 20 and plain == expected,
          f"{distinct} distinct of 20, unprotected served verbatim {plain == expected}")


def test_ac10_end_to_end_trigger(check, trained_model, tmp_path):
    clf = Classifier(trained_model[0])
    rng = random.Random(10)
    url = next(u for u in (malware(rng) for _ in range(200)) if clf.classify_url(u).action == "trap")
    listener_capture = CapturingSocket(bound_udp())
    t0 = time.perf_counter()
    with Honeypot(HoneypotConfig(port=0, log_dir=str(tmp_path)), control_sock=listener_capture) as hp:
        srv = serve_http(clf, port=0, control_endpoint=hp.control_address)
        srv.start_background()
        try:
            conn = http.client.HTTPConnection(*srv.server_address[:2], timeout=5)
            conn.request("POST", "/v1/check", body=json.dumps({"url": url}))
            verdict = json.loads(conn.getresponse().read())
            conn.close()
            logged = wait_for(lambda: hp.control_log.events, 4)
            time.sleep(0.2)
            events = list(hp.control_log.events)
        finally:
            srv.close()
    elapsed = time.perf_counter() - t0
    activations = [e for e in events if e.payload.startswith("ACTIVATE")]
    ok = (verdict["action"] == "trap" and bool(logged) and len(activations) == 1
          and activations[0].kind == "control-applied" and elapsed < 5)
    check("AC-10 end-to-end trigger (trap -> 1 ACTIVATE -> control-applied, < 5 s)", ok,
          f"verdict {verdict['class']}/{verdict['action']}, ACTIVATE events {len(activations)}, {elapsed:.2f} s")


def test_ac11_model_persistence(check, tmp_path):
    params = init_params(np.random.default_rng(11))
    X = np.random.default_rng(12).normal(0, 3, (1000, params.layers[0].input_dim))
    params.feature_mean[:] = X.mean(axis=0)
    params.feature_std[:] = X.std(axis=0)
    before = predict_proba(params, X)
    save_model(params, tmp_path / "m.bin")
    after = predict_proba(load_model(tmp_path / "m.bin"), X)
    identical = before.tobytes() == after.tobytes()
    check("AC-11 model persistence (bit-identical predictions on 1000 vectors)", identical,
          f"max abs diff {float(np.abs(before - after).max()):.1e}")
