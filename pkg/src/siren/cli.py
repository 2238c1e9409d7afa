"""``siren`` command line: every pipeline stage behind one entry point.

Configuration precedence is flags > ``SIREN_<KEY>`` environment variables >
the key=value file named by ``--config`` or ``SIREN_CONFIG`` > defaults.
Each run echoes its effective configuration as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from siren.errors import SirenError

PROG = "siren"
RANDOM_SUBCOMMANDS = {"train", "keygen", "honeypot"}


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ratios(text: str) -> tuple[float, float, float]:
    parts = tuple(float(p) for p in str(text).split(","))
    if len(parts) != 3:
        raise ValueError(f"ratios need three comma-separated numbers, got {text!r}")
    return parts


def _endpoint(text: str | None) -> tuple[str, int] | None:
    if text in (None, "", "none"):
        return None
    host, sep, port = str(text).rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must be HOST:PORT, got {text!r}")
    return host.strip("[]"), int(port)


def _opt_int(text) -> int | None:
    return None if text in (None, "", "none") else int(text)


def _opt_str(text) -> str | None:
    return None if text in (None, "", "none") else str(text)


@dataclass(frozen=True)
class Option:
    type: Callable[[Any], Any]
    default: Any
    help: str


OPTIONS: dict[str, Option] = {
    "dataset": Option(str, "data/malicious_phish.csv", "URL corpus CSV (url,type)"),
    "model": Option(str, "siren-model.bin", "model file"),
    "history": Option(_opt_str, None, "per-epoch history CSV to write"),
    "split_out": Option(_opt_str, None, "write the split indices as JSON"),
    "metrics_out": Option(_opt_str, None, "write train/validation/test metrics as JSON"),
    "seed": Option(_opt_int, None, "seed for every random choice in this run"),
    "ratios": Option(_ratios, (0.75, 0.15, 0.10), "train,test,validation fractions"),
    "subsample": Option(int, 0, "stratified subsample size before splitting (0 = all)"),
    "learning_rate": Option(float, 1e-3, "NAdam learning rate"),
    "batch_size": Option(int, 512, "minibatch size"),
    "epochs": Option(int, 30, "maximum epochs"),
    "patience": Option(int, 5, "early-stopping patience in epochs"),
    "threshold": Option(float, 0.5, "minimum probability for a trap verdict"),
    "output": Option(_opt_str, None, "output file (default stdout)"),
    "key": Option(str, "siren.key", "key file"),
    "entropy": Option(str, "fixture", "entropy provider: fixture | live"),
    "cities": Option(_opt_str, None, "city fixture CSV (default: bundled 20 cities)"),
    "multiplier_x": Option(_opt_int, None, "pin the prime multiplier (default: drawn per key)"),
    "host": Option(str, "127.0.0.1", "listen address"),
    "shell_port": Option(int, 2222, "honeypot shell TCP port"),
    "proxy_port": Option(int, 8080, "check-service HTTP port"),
    "control_host": Option(str, "127.0.0.1", "honeypot control UDP address"),
    "control_port": Option(int, 9999, "honeypot control UDP port"),
    "control_endpoint": Option(_endpoint, None, "honeypot control HOST:PORT for trap triggers"),
    "trigger_log": Option(_opt_str, None, "JSONL file recording emitted triggers"),
    "log_dir": Option(str, "honeypot-logs", "session log directory"),
    "fs_seed": Option(_opt_str, None, "virtual filesystem seed JSON (default: bundled)"),
    "banner": Option(str, "Ubuntu 22.04.4 LTS fileserver-02 tty1", "greeting line"),
    "activity_interval": Option(float, 30.0, "mean seconds between simulated mutations"),
    "activity_autostart": Option(_bool, False, "start simulated activity at launch"),
}

SUBCOMMAND_KEYS: dict[str, tuple[str, ...]] = {
    "stats": ("dataset",),
    "train": ("dataset", "model", "history", "split_out", "metrics_out", "seed", "ratios", "subsample",
              "learning_rate", "batch_size", "epochs", "patience"),
    "classify": ("model", "threshold", "output"),
    "keygen": ("key", "seed", "entropy", "cities", "multiplier_x"),
    "encrypt": ("key", "output"),
    "decrypt": ("key", "output"),
    "honeypot": ("host", "shell_port", "control_host", "control_port", "log_dir", "fs_seed", "banner",
                 "seed", "entropy", "cities", "multiplier_x", "activity_interval", "activity_autostart"),
    "proxy": ("model", "threshold", "host", "proxy_port", "control_endpoint", "trigger_log"),
    "control": ("control_host", "control_port"),
    "export": ("log_dir", "output"),
    "layout": (),
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in OPTIONS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def resolve_config(subcommand: str, flags: dict[str, Any], env: dict[str, str] | None = None,
                   config_path: str | None = None) -> dict[str, Any]:
    env = os.environ if env is None else env
    path = config_path or env.get("SIREN_CONFIG")
    file_values = read_config_file(path) if path else {}
    cfg: dict[str, Any] = {}
    for key in SUBCOMMAND_KEYS[subcommand]:
        opt = OPTIONS[key]
        env_key = "SIREN_" + key.upper()
        if flags.get(key) is not None:
            raw = flags[key]
        elif env_key in env:
            raw = env[env_key]
        elif key in file_values:
            raw = file_values[key]
        else:
            cfg[key] = opt.default
            continue
        try:
            cfg[key] = opt.type(raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"invalid value for {key}: {exc}") from None
    if subcommand in RANDOM_SUBCOMMANDS and cfg.get("seed") is None:
        cfg["seed"] = secrets.randbelow(2**32)
    return cfg


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def echo_config(subcommand: str, cfg: dict[str, Any], args: dict[str, Any]) -> None:
    doc = {"subcommand": subcommand, "config": {k: _jsonable(v) for k, v in cfg.items()}, "args": args}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def _open_out(path: str | None):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def _close_out(fh) -> None:
    if fh is not sys.stdout:
        fh.close()


# -- subcommands --------------------------------------------------------------

def cmd_stats(cfg, args) -> int:
    from siren.dataset import class_distribution, load_csv

    corpus = load_csv(cfg["dataset"])
    dist = class_distribution(corpus)
    r = corpus.report
    print(f"rows read {r.rows_read}, retained {r.retained}, dropped {r.dropped} "
          f"(empty {r.dropped_empty}, unknown label {r.dropped_unknown_label}, duplicate {r.dropped_duplicate})")
    print(f"{'class':<12}{'count':>10}{'percent':>10}")
    for label, count, pct in dist.table():
        print(f"{label:<12}{count:>10}{pct:>9.2f}%")
    print(f"{'total':<12}{dist.total:>10}{100.0:>9.2f}%")
    print(f"majority: {dist.majority.label}")
    return 0


def format_metrics_table(results: dict) -> str:
    cols = list(results)
    rows = [("loss", "loss"), ("recall", "recall_weighted"), ("precision", "precision_weighted"),
            ("accuracy", "accuracy")]
    lines = [f"{'metric':<12}" + "".join(f"{c:>12}" for c in cols)]
    for name, attr in rows:
        lines.append(f"{name:<12}" + "".join(f"{getattr(results[c], attr):>12.4f}" for c in cols))
    return "\n".join(lines)


def cmd_train(cfg, args) -> int:
    from siren.dataset import load_csv, stratified_split, stratified_subsample, vectorize
    from siren.nn import TrainConfig, evaluate, save_model, train
    from siren.nn.training import write_history

    corpus = load_csv(cfg["dataset"])
    records = list(corpus.records)
    if cfg["subsample"]:
        records = [records[i] for i in stratified_subsample(records, cfg["subsample"], cfg["seed"])]
    data = vectorize(records)
    split = stratified_split(data.labels, cfg["ratios"], cfg["seed"])
    tc = TrainConfig(learning_rate=cfg["learning_rate"], batch_size=cfg["batch_size"],
                     max_epochs=cfg["epochs"], patience=cfg["patience"], seed=cfg["seed"])
    X, Y = data.X, data.Y
    result = train(X[split.train], Y[split.train], X[split.validation], Y[split.validation], tc)
    metrics = {name: evaluate(result.params, X[idx], Y[idx])
               for name, idx in (("train", split.train), ("validation", split.validation), ("test", split.test))}
    save_model(result.params, cfg["model"])
    if cfg["history"]:
        write_history(result.history, cfg["history"])
    if cfg["split_out"]:
        split.save(cfg["split_out"])
    if cfg["metrics_out"]:
        doc = {k: m.as_dict() for k, m in metrics.items()}
        doc["best_epoch"] = result.best_epoch
        doc["epochs_run"] = len(result.history)
        doc["model_version"] = result.params.fingerprint()
        Path(cfg["metrics_out"]).write_text(json.dumps(doc, indent=2), encoding="utf-8")
    print(f"records {len(records)} (unextractable {data.dropped}); "
          f"split train {len(split.train)} / validation {len(split.validation)} / test {len(split.test)}")
    print(f"epochs run {len(result.history)}, best epoch {result.best_epoch}")
    print(format_metrics_table(metrics))
    print(f"model written to {cfg['model']} (version {result.params.fingerprint()})")
    return 0


def cmd_classify(cfg, args) -> int:
    from siren.proxy import Classifier, Unscorable, batch_check

    if not Path(cfg["model"]).is_file():
        raise SirenError(f"model file not found: {cfg['model']}")
    clf = Classifier.from_file(cfg["model"], cfg["threshold"])
    if args["url"] is not None:
        v = clf.classify_url(args["url"])
        out = _open_out(cfg["output"])
        try:
            print(json.dumps(v.as_dict()), file=out)
        finally:
            _close_out(out)
        return 3 if isinstance(v, Unscorable) else 0
    src = sys.stdin if args["file"] == "-" else open(args["file"], encoding="utf-8", errors="replace")
    out = _open_out(cfg["output"])
    try:
        report = batch_check(src, clf, out)
    finally:
        _close_out(out)
        if src is not sys.stdin:
            src.close()
    print(f"rows {report.rows}, blank lines skipped {report.skipped_blank}, unscorable {report.unscorable}",
          file=sys.stderr)
    return 0


def _provider(cfg):
    from siren.honeypot.server import HoneypotConfig, build_provider

    return build_provider(HoneypotConfig(entropy=cfg["entropy"], cities_file=cfg["cities"]))


def cmd_keygen(cfg, args) -> int:
    from siren.crypto.rsa import generate_keypair, write_key_file

    key = generate_keypair(_provider(cfg), random.Random(cfg["seed"]), cfg["multiplier_x"])
    write_key_file(key, cfg["key"])
    print(json.dumps({"key_file": cfg["key"], "n": key.n, "e": key.e, "bits": key.n.bit_length(),
                      "x": key.multiplier_x}))
    return 0


CIPHER_HEADER = "siren-ciphertext"


def cmd_encrypt(cfg, args) -> int:
    from siren.crypto.rsa import encrypt_blob, read_key_file, render_hex

    key = read_key_file(cfg["key"])
    data = sys.stdin.buffer.read() if args["input"] == "-" else Path(args["input"]).read_bytes()
    body = render_hex(encrypt_blob(data, key), key.n)
    out = _open_out(cfg["output"])
    try:
        out.write(f"{CIPHER_HEADER} n={key.n}\n{body}\n")
    finally:
        _close_out(out)
    return 0


def cmd_decrypt(cfg, args) -> int:
    from siren.crypto.rsa import decrypt_blob, read_key_file

    key = read_key_file(cfg["key"])
    text = sys.stdin.read() if args["input"] == "-" else Path(args["input"]).read_text(encoding="ascii")
    header, _, body = text.partition("\n")
    fields = header.split()
    if not fields or fields[0] != CIPHER_HEADER or len(fields) != 2 or not fields[1].startswith("n="):
        raise SirenError("input is not a siren ciphertext file")
    if int(fields[1][2:]) != key.n:
        raise SirenError("ciphertext was produced under a different modulus")
    try:
        blocks = [int(tok, 16) for tok in body.split()]
    except ValueError:
        raise SirenError("ciphertext body is not hex") from None
    plain = decrypt_blob(blocks, key)
    if cfg["output"]:
        Path(cfg["output"]).write_bytes(plain)
    else:
        sys.stdout.buffer.write(plain)
        sys.stdout.flush()
    return 0


def cmd_honeypot(cfg, args) -> int:
    from siren.honeypot.server import Honeypot, HoneypotConfig

    hc = HoneypotConfig(
        host=cfg["host"], port=cfg["shell_port"], control_host=cfg["control_host"],
        control_port=cfg["control_port"], fs_seed=cfg["fs_seed"], log_dir=cfg["log_dir"],
        banner=cfg["banner"], activity_seed=cfg["seed"], activity_interval=cfg["activity_interval"],
        activity_autostart=cfg["activity_autostart"], entropy=cfg["entropy"], cities_file=cfg["cities"],
        multiplier_x=cfg["multiplier_x"], key_seed=cfg["seed"])
    hp = Honeypot(hc).start()
    print("honeypot shell on %s:%d, control on %s:%d" % (*hp.shell_address, *hp.control_address),
          file=sys.stderr, flush=True)
    try:
        hp.wait()
    except KeyboardInterrupt:
        pass
    finally:
        hp.stop()
    return 0


def cmd_proxy(cfg, args) -> int:
    from siren.proxy import Classifier, TriggerLog, serve_http

    if not Path(cfg["model"]).is_file():
        raise SirenError(f"model file not found: {cfg['model']}")
    clf = Classifier.from_file(cfg["model"], cfg["threshold"])
    try:
        srv = serve_http(clf, cfg["host"], cfg["proxy_port"], cfg["control_endpoint"],
                         TriggerLog(cfg["trigger_log"]))
    except OSError as exc:
        raise SirenError(f"cannot bind {cfg['host']}:{cfg['proxy_port']}: {exc}") from exc
    print("check service on http://%s:%d (model %s)" % (*srv.server_address[:2], clf.model_version),
          file=sys.stderr, flush=True)
    try:
        srv.serve_forever(poll_interval=0.2)
    except KeyboardInterrupt:
        pass
    finally:
        srv.server_close()
    return 0


def cmd_control(cfg, args) -> int:
    from siren.honeypot.control import ControlCommand, send_control

    cmd = ControlCommand(args["verb"].upper(), args["arg"])
    sent = send_control(cfg["control_host"], cfg["control_port"], cmd)
    print(f"sent {sent} bytes to {cfg['control_host']}:{cfg['control_port']}: {cmd}", file=sys.stderr)
    return 0


def cmd_export(cfg, args) -> int:
    from dataclasses import asdict

    from siren.honeypot.export import export_sessions

    manifest = export_sessions(cfg["log_dir"], args["archive"])
    print(json.dumps(asdict(manifest)))
    return 0


def cmd_layout(cfg, args) -> int:
    from siren.features import layout_hash, layout_manifest

    print(json.dumps({"layout_hash": layout_hash().hex(), "features": layout_manifest()}, indent=2))
    return 0


COMMANDS = {
    "stats": (cmd_stats, "class distribution of a URL corpus"),
    "train": (cmd_train, "split, train and evaluate the classifier"),
    "classify": (cmd_classify, "score one URL or a file of URLs"),
    "keygen": (cmd_keygen, "generate a weather-seeded RSA key file"),
    "encrypt": (cmd_encrypt, "encrypt a file under a key file"),
    "decrypt": (cmd_decrypt, "decrypt a siren ciphertext file"),
    "honeypot": (cmd_honeypot, "run the fake-shell honeypot"),
    "proxy": (cmd_proxy, "run the URL check service"),
    "control": (cmd_control, "send one control datagram to a honeypot"),
    "export": (cmd_export, "merge honeypot logs into one archive"),
    "layout": (cmd_layout, "print the feature layout"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="URL classification and honeypot toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--config", help="key=value config file (overrides SIREN_CONFIG)")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        for key in SUBCOMMAND_KEYS[name]:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=OPTIONS[key].help)
        if name == "classify":
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("url", nargs="?", default=None)
            g.add_argument("--file", help="one URL per line ('-' for stdin)")
        elif name in ("encrypt", "decrypt"):
            p.add_argument("input", help="input file ('-' for stdin)")
        elif name == "control":
            p.add_argument("verb")
            p.add_argument("arg", nargs="?", default=None)
        elif name == "export":
            p.add_argument("archive", help="archive file to write")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    name = ns.subcommand
    values = vars(ns)
    flags = {k: values.get(k) for k in SUBCOMMAND_KEYS[name]}
    extra = {k: v for k, v in values.items() if k not in flags and k not in ("subcommand", "verbose", "config")}
    try:
        cfg = resolve_config(name, flags, config_path=ns.config)
        echo_config(name, cfg, extra)
        return COMMANDS[name][0](cfg, extra)
    except (SirenError, OSError, ValueError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"{PROG} {name}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
