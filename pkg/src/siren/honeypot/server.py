"""TCP fake-shell service tying together the filesystem, shell, control channel and logs."""

from __future__ import annotations

import itertools
import logging
import os
import socket
import socketserver
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

from siren.crypto.weather import FixtureProvider, LiveProvider, WeatherClient
from siren.errors import SirenError
from siren.honeypot.activity import ActivitySimulator
from siren.honeypot.control import ControlCommand, ControlListener
from siren.honeypot.events import (
    COMMAND,
    CONNECT,
    CONTROL_APPLIED,
    DISCONNECT,
    RESPONSE,
    Clock,
    EventLog,
    wall_clock,
)
from siren.honeypot.shell import Session, Shell, Staller
from siren.honeypot.vfs import VirtualFs

logger = logging.getLogger(__name__)

MAX_LINE = 4096


@dataclass
class HoneypotConfig:
    host: str = "127.0.0.1"
    port: int = 2222
    control_host: str = "127.0.0.1"
    control_port: int = 9999
    fs_seed: str | None = None
    log_dir: str = "honeypot-logs"
    banner: str = "Ubuntu 22.04.4 LTS fileserver-02 tty1"
    activity_seed: int = 0
    activity_interval: float = 30.0
    activity_autostart: bool = False
    entropy: str = "fixture"  # fixture | live
    cities_file: str | None = None
    multiplier_x: int | None = None
    key_seed: int | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def build_provider(config: HoneypotConfig):
    fixture = FixtureProvider.from_file(config.cities_file) if config.cities_file else FixtureProvider.default()
    if config.entropy == "fixture":
        return fixture
    if config.entropy == "live":
        names = [o.city_name for o in fixture.observations]
        return LiveProvider(names, WeatherClient(), fallback=fixture)
    raise ValueError(f"entropy must be 'fixture' or 'live', got {config.entropy!r}")


class _SessionHandler(socketserver.StreamRequestHandler):
    server: "_TcpServer"

    def handle(self) -> None:
        hp = self.server.honeypot
        session = hp.open_session("%s:%s" % self.client_address[:2])
        try:
            self.wfile.write(f"{hp.config.banner}\n$ ".encode())
            while not session.closed:
                raw = self.rfile.readline(MAX_LINE)
                if not raw:
                    break
                line = raw.decode("utf-8", errors="replace").rstrip("\r\n")
                session.log.record(COMMAND, line)
                resp = hp.shell.handle_command(session, line)
                out = (resp + "\n") if resp else ""
                session.log.record(RESPONSE, resp, len(out.encode()))
                self.wfile.write((out if session.closed else out + "$ ").encode())
        except OSError:
            pass
        finally:
            hp.close_session(session)


class _TcpServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, honeypot: "Honeypot"):
        self.honeypot = honeypot
        super().__init__(addr, _SessionHandler)


class Honeypot:
    """``control_sock`` is an optional pre-bound datagram socket for the control channel."""

    def __init__(self, config: HoneypotConfig, clock: Clock = wall_clock, provider=None,
                 control_sock: socket.socket | None = None):
        self.config = config
        self._control_sock = control_sock
        self.clock = clock
        self.log_dir = Path(config.log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.fs = VirtualFs.from_seed_file(config.fs_seed)
        self.staller = Staller(provider or build_provider(config), config.key_seed, config.multiplier_x)
        self.shell = Shell(self.fs, self.staller)
        self.control_log = EventLog("control", clock, self.log_dir / "control.jsonl")
        self.activity = ActivitySimulator(
            self.fs, config.activity_seed, clock,
            EventLog("activity", clock, self.log_dir / "activity.jsonl"), config.activity_interval)
        self.activated_by: str | None = None
        self.sessions: dict[str, Session] = {}
        self._run_id = os.urandom(4).hex()
        self._counter = itertools.count(1)
        self._lock = threading.Lock()
        self._tcp: _TcpServer | None = None
        self._control: ControlListener | None = None
        self._threads: list[threading.Thread] = []
        self.stopped = threading.Event()
        self._stopping = False

    # -- sessions ---------------------------------------------------------
    def open_session(self, peer: str) -> Session:
        with self._lock:
            sid = f"{self._run_id}-{next(self._counter):05d}"
        session = Session(sid, peer, EventLog(sid, self.clock, self.log_dir / f"session-{sid}.jsonl"))
        self.shell.open_session(session)
        session.log.record(CONNECT, peer)
        with self._lock:
            self.sessions[sid] = session
        return session

    def close_session(self, session: Session) -> None:
        with self._lock:
            if session.disconnected:
                return
            session.disconnected = True
        session.closed = True
        session.log.record(DISCONNECT, session.peer)

    # -- control ----------------------------------------------------------
    def apply_control(self, cmd: ControlCommand) -> None:
        verb = cmd.verb
        if verb == "ENCRYPT_ALL":
            detail = f"protected {self.fs.protect_all()} files"
        elif verb == "ROTATE_KEYS":
            self.staller.rotate(int(cmd.arg) if cmd.arg else None)
            detail = "key rng reseeded"
        elif verb == "SEED":
            if cmd.arg is None:
                raise ValueError("SEED needs an integer argument")
            self.activity.reseed(int(cmd.arg))
            detail = f"activity seed {int(cmd.arg)}"
        elif verb == "ACTIVATE":
            self.activated_by = cmd.arg or "unspecified"
            self.activity.start()
            detail = f"activated ({self.activated_by})"
        else:
            detail = "shutting down"
        self.control_log.record(CONTROL_APPLIED, f"{cmd} -> {detail}")
        if verb == "SHUTDOWN":
            threading.Thread(target=self.stop, daemon=True).start()

    def _control_malformed(self, data: bytes, reason: str) -> None:
        logger.warning("malformed control datagram %r: %s", data[:64], reason)

    # -- lifecycle --------------------------------------------------------
    def start(self) -> "Honeypot":
        try:
            self._tcp = _TcpServer((self.config.host, self.config.port), self)
        except OSError as exc:
            raise SirenError(f"cannot bind shell port {self.config.host}:{self.config.port}: {exc}") from exc
        try:
            self._control = ControlListener(self.apply_control, self.config.control_host, self.config.control_port,
                                            sock=self._control_sock, on_malformed=self._control_malformed)
        except OSError as exc:
            self._tcp.server_close()
            raise SirenError(f"cannot bind control port {self.config.control_port}: {exc}") from exc
        self._control.start()
        t = threading.Thread(target=self._tcp.serve_forever, kwargs={"poll_interval": 0.1},
                             name="siren-shell", daemon=True)
        t.start()
        self._threads.append(t)
        if self.config.activity_autostart:
            self.activity.start()
        logger.info("honeypot shell on %s:%d, control on %s:%d",
                    *self.shell_address, *self.control_address)
        return self

    @property
    def shell_address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    @property
    def control_address(self) -> tuple[str, int]:
        return self._control.address

    def stop(self) -> None:
        with self._lock:
            if self._stopping:
                return
            self._stopping = True
        self.activity.stop()
        if self._control is not None:
            self._control.stop()
        if self._tcp is not None:
            self._tcp.shutdown()
            self._tcp.server_close()
        self.stopped.set()

    def wait(self) -> None:
        self.stopped.wait()

    def __enter__(self) -> "Honeypot":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
