"""One-way control channel: UDP datagrams from the mainframe into the honeypot.

The listener only ever calls ``recvfrom``; there is no code path that
writes to its socket. Senders get no acknowledgement.
"""

from __future__ import annotations

import logging
import socket
import threading
from dataclasses import dataclass
from typing import Callable

from siren.errors import ControlCommandError

logger = logging.getLogger(__name__)

VERBS = frozenset({"ENCRYPT_ALL", "ROTATE_KEYS", "SEED", "ACTIVATE", "SHUTDOWN"})
MAX_DATAGRAM = 512


@dataclass(frozen=True)
class ControlCommand:
    verb: str
    arg: str | None = None

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ControlCommandError(f"unknown control verb {self.verb!r}")

    def encode(self) -> bytes:
        text = self.verb if self.arg is None else f"{self.verb} {self.arg}"
        data = (text + "\n").encode("ascii")
        if len(data) > MAX_DATAGRAM:
            raise ControlCommandError(f"control datagram exceeds {MAX_DATAGRAM} bytes")
        return data

    def __str__(self) -> str:
        return self.verb if self.arg is None else f"{self.verb} {self.arg}"


def parse_datagram(data: bytes) -> ControlCommand:
    """Parse ``b"<VERB> [arg]\\n"``; raises ControlCommandError on anything else."""
    if len(data) > MAX_DATAGRAM:
        raise ControlCommandError("datagram too large")
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        raise ControlCommandError("datagram is not ASCII") from None
    if not text.endswith("\n") or "\n" in text[:-1]:
        raise ControlCommandError("datagram must be a single LF-terminated line")
    line = text[:-1].rstrip("\r")
    verb, _, arg = line.partition(" ")
    arg = arg.strip() or None
    return ControlCommand(verb, arg)


def send_control(host: str, port: int, command: ControlCommand) -> int:
    """Fire-and-forget one datagram; returns the byte count handed to the OS."""
    data = command.encode()
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    with socket.socket(family, socket.SOCK_DGRAM) as s:
        return s.sendto(data, (host, port))


class ControlListener:
    """Receive-only UDP endpoint dispatching parsed commands to ``handler``.

    ``on_malformed`` is called with (raw bytes, reason) for dropped datagrams.
    """

    def __init__(self, handler: Callable[[ControlCommand], None], host: str = "127.0.0.1", port: int = 0,
                 sock: socket.socket | None = None,
                 on_malformed: Callable[[bytes, str], None] | None = None):
        self.handler = handler
        self.on_malformed = on_malformed
        if sock is None:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            sock.bind((host, port))
        self.sock = sock
        self.sock.settimeout(0.2)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.received = 0
        self.dropped = 0

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()[:2]

    def start(self) -> "ControlListener":
        self._thread = threading.Thread(target=self._run, name="siren-control", daemon=True)
        self._thread.start()
        return self

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                data, peer = self.sock.recvfrom(MAX_DATAGRAM + 1)
            except socket.timeout:
                continue
            except OSError:
                break
            self.received += 1
            try:
                cmd = parse_datagram(data)
            except ControlCommandError as exc:
                self.dropped += 1
                logger.warning("dropped control datagram from %s: %s", peer, exc)
                if self.on_malformed:
                    self.on_malformed(data, str(exc))
                continue
            try:
                self.handler(cmd)
            except Exception:  # a bad command must not kill the listener
                logger.exception("control command %s failed", cmd)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None and self._thread is not threading.current_thread():
            self._thread.join(timeout=2)
        self.sock.close()
