"""Simulated user activity: the tree keeps changing after the real user has left."""

from __future__ import annotations

import datetime as dt
import posixpath
import random
import threading

from siren.honeypot.events import ACTIVITY_SIM, Clock, EventLog
from siren.honeypot.vfs import VirtualFs

FILE_STEMS = ("report", "notes", "invoice", "backup_list", "meeting", "todo", "draft", "export", "budget", "creds_old")
FILE_EXTS = (".txt", ".csv", ".md", ".log", ".conf")
LINE_TEMPLATES = (
    "reviewed {n} tickets, escalated {m}",
    "vpn token resync for user{n}",
    "moved share //fs{m}/dept{n} to archive",
    "db snapshot {n} completed in {m}s",
    "reminder: rotate service password #{n}",
    "invoice {n} approved, amount {m}00",
)
AUDIT_TEMPLATES = (
    "sshd[{pid}]: Accepted password for {user} from 10.0.4.{m} port {port} ssh2",
    "sudo: {user} : TTY=pts/{n} ; PWD=/home/{user} ; USER=root ; COMMAND=/usr/bin/apt update",
    "CRON[{pid}]: pam_unix(cron:session): session opened for user root by (uid=0)",
    "systemd-logind[{pid}]: New session {n} of user {user}.",
)
ACTIONS = ("create", "edit", "touch", "audit")
AUDIT_LOG = "/var/log/auth.log"


class ActivitySimulator:
    """Mutates the virtual tree at randomized intervals.

    With a fixed seed and a :class:`~siren.honeypot.events.VirtualClock`
    the sequence of mutations is reproducible; :meth:`run_ticks` drives it
    without real sleeping.
    """

    def __init__(self, fs: VirtualFs, seed: int = 0, clock: Clock | None = None,
                 log: EventLog | None = None, interval: float = 30.0):
        self.fs = fs
        self.rng = random.Random(seed)
        if log is None:
            log = EventLog("activity", clock) if clock else EventLog("activity")
        self.log = log
        self.clock = clock or log.clock
        self.interval = interval
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._created = 0

    def reseed(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def next_delay(self) -> float:
        return self.rng.uniform(0.5, 1.5) * self.interval

    def _user_files(self) -> list[str]:
        home = self.fs.home.rstrip("/") + "/"
        return [p for p, f in self.fs.files() if p.startswith(home) and not f.protected]

    def tick(self) -> str:
        """Apply one mutation and return its description."""
        now = self.clock()
        rng = self.rng
        action = rng.choice(ACTIONS)
        candidates = self._user_files()
        if action in ("edit", "touch") and not candidates:
            action = "create"
        n, m = rng.randint(1, 999), rng.randint(2, 99)
        if action == "create":
            self._created += 1
            name = f"{rng.choice(FILE_STEMS)}_{now:%Y%m%d}_{self._created}{rng.choice(FILE_EXTS)}"
            path = posixpath.join(self.fs.home, name)
            body = "\n".join(rng.choice(LINE_TEMPLATES).format(n=n + i, m=m) for i in range(rng.randint(1, 4)))
            self.fs.write_file(path, body + "\n", protected=False, when=now)
        elif action == "edit":
            path = rng.choice(candidates)
            self.fs.append(path, rng.choice(LINE_TEMPLATES).format(n=n, m=m) + "\n", when=now)
        elif action == "touch":
            path = rng.choice(candidates)
            self.fs.touch(path, now)
        else:
            path = AUDIT_LOG
            line = rng.choice(AUDIT_TEMPLATES).format(
                pid=rng.randint(1000, 32000), user=self.fs.user, n=n % 8, m=m, port=rng.randint(40000, 65000))
            self.fs.append(path, f"{now:%b %d %H:%M:%S} {self.fs.hostname} {line}\n", when=now)
        desc = f"{action} {path}"
        self.log.record(ACTIVITY_SIM, desc)
        return desc

    def run_ticks(self, count: int, advance=None) -> list[str]:
        """Run ``count`` mutations; ``advance(seconds)`` moves a virtual clock between them."""
        out = []
        for _ in range(count):
            delay = self.next_delay()
            if advance is not None:
                advance(delay)
            out.append(self.tick())
        return out

    def start(self) -> None:
        if self._thread and self._thread.is_alive():
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._loop, name="siren-activity", daemon=True)
        self._thread.start()

    def _loop(self) -> None:
        while not self._stop.wait(self.next_delay()):
            self.tick()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)

    @property
    def running(self) -> bool:
        return bool(self._thread and self._thread.is_alive())
