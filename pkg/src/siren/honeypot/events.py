"""Session events, clocks and the append-only JSON-lines event log."""

from __future__ import annotations

import datetime as dt
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

CONNECT = "connect"
COMMAND = "command"
RESPONSE = "response"
DISCONNECT = "disconnect"
CONTROL_APPLIED = "control-applied"
ACTIVITY_SIM = "activity-sim"
EVENT_KINDS = frozenset({CONNECT, COMMAND, RESPONSE, DISCONNECT, CONTROL_APPLIED, ACTIVITY_SIM})

Clock = Callable[[], dt.datetime]


def wall_clock() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)


class VirtualClock:
    """Manually advanced clock for deterministic tests and simulations."""

    def __init__(self, start: dt.datetime | None = None):
        self.now = start or dt.datetime(2024, 5, 1, 9, 0, tzinfo=dt.timezone.utc)
        self._lock = threading.Lock()

    def __call__(self) -> dt.datetime:
        with self._lock:
            return self.now

    def advance(self, seconds: float) -> dt.datetime:
        with self._lock:
            self.now += dt.timedelta(seconds=seconds)
            return self.now


@dataclass(frozen=True)
class SessionEvent:
    timestamp: dt.datetime
    session_id: str
    kind: str
    payload: str = ""
    response_bytes: int = 0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp.isoformat(timespec="microseconds"),
            "session_id": self.session_id,
            "kind": self.kind,
            "payload": self.payload,
            "response_bytes": self.response_bytes,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "SessionEvent":
        return cls(dt.datetime.fromisoformat(d["timestamp"]), d["session_id"], d["kind"],
                   d.get("payload", ""), int(d.get("response_bytes", 0)))

    @classmethod
    def from_line(cls, line: str) -> "SessionEvent":
        return cls.from_dict(json.loads(line))


class EventLog:
    """Events for one stream (a session, or the control/activity channels).

    Timestamps are forced strictly increasing: if the clock has not moved
    since the previous event, the new one is stamped one microsecond later.
    """

    def __init__(self, stream_id: str, clock: Clock = wall_clock, path: Path | None = None):
        self.stream_id = stream_id
        self.clock = clock
        self.path = path
        self.events: list[SessionEvent] = []
        self._lock = threading.Lock()

    def record(self, kind: str, payload: str = "", response_bytes: int = 0) -> SessionEvent:
        with self._lock:
            ts = self.clock()
            if self.events and ts <= self.events[-1].timestamp:
                ts = self.events[-1].timestamp + dt.timedelta(microseconds=1)
            ev = SessionEvent(ts, self.stream_id, kind, payload, response_bytes)
            self.events.append(ev)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(ev.to_line() + "\n")
            return ev


def read_log(path: str | Path) -> list[SessionEvent]:
    with Path(path).open(encoding="utf-8") as fh:
        return [SessionEvent.from_line(line) for line in fh if line.strip()]
