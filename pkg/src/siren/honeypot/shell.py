"""Fake shell command handling and stalled (freshly encrypted) file reads."""

from __future__ import annotations

import os
import random
import shlex
import threading
from dataclasses import dataclass, field

from siren.crypto.rsa import encrypt_blob, generate_keypair, render_hex
from siren.crypto.weather import EntropyProvider, FixtureProvider
from siren.honeypot.events import EventLog
from siren.honeypot.vfs import VirtualDir, VirtualFile, VirtualFs, resolve

UNAME_A = "Linux {host} 5.15.0-105-generic #115-Ubuntu SMP Mon Apr 15 09:52:04 UTC 2024 x86_64 x86_64 x86_64 GNU/Linux"
HELP_TEXT = "Available commands: ls cd pwd cat whoami uname id help exit"


class Staller:
    """Encrypts protected files under a brand-new key pair on every read."""

    def __init__(self, provider: EntropyProvider | None = None, seed: int | None = None, x: int | None = None):
        self.provider = provider or FixtureProvider.default()
        self.x = x
        self._rng = random.Random(seed if seed is not None else os.urandom(16))
        self._lock = threading.Lock()
        self.keys_generated = 0

    def rotate(self, seed: int | None = None) -> None:
        with self._lock:
            self._rng = random.Random(seed if seed is not None else os.urandom(16))

    def render(self, content: bytes) -> str:
        with self._lock:
            key = generate_keypair(self.provider, self._rng, self.x)
            self.keys_generated += 1
        if not content:
            return ""
        # key material stays local to this call
        return render_hex(encrypt_blob(content, key), key.n)


def read_file_stalled(fs: VirtualFs, path: str, staller: Staller, cwd: str = "/") -> str:
    """Ciphertext rendering for protected files, plaintext for the rest."""
    node = fs.get(resolve(cwd, path))
    if node is None:
        raise FileNotFoundError(path)
    if isinstance(node, VirtualDir):
        raise IsADirectoryError(path)
    with fs.lock:
        content, protected = node.content, node.protected
    if protected:
        return staller.render(content)
    return content.decode("utf-8", errors="replace")


@dataclass
class Session:
    session_id: str
    peer: str
    log: EventLog
    cwd: str = "/"
    closed: bool = False
    disconnected: bool = False
    history: list[str] = field(default_factory=list)

    @property
    def events(self):
        return self.log.events


def _long_entry(name: str, node) -> str:
    stamp = node.mtime.strftime("%b %d %H:%M")
    if isinstance(node, VirtualDir):
        return f"drwxr-xr-x 2 admin admin 4096 {stamp} {name}"
    mode = "-rw-------" if node.protected else "-rw-r--r--"
    return f"{mode} 1 admin admin {len(node.content):>5} {stamp} {name}"


class Shell:
    def __init__(self, fs: VirtualFs, staller: Staller):
        self.fs = fs
        self.staller = staller

    def open_session(self, session: Session) -> None:
        session.cwd = self.fs.home if self.fs.is_dir(self.fs.home) else "/"

    def handle_command(self, session: Session, line: str) -> str:
        """Execute one input line; sets ``session.closed`` on exit."""
        line = line.strip()
        if not line:
            return ""
        session.history.append(line)
        try:
            argv = shlex.split(line)
        except ValueError:
            argv = line.split()
        cmd, args = argv[0], argv[1:]
        handler = getattr(self, f"_cmd_{cmd}", None)
        if handler is None:
            return f"sh: {cmd}: command not found"
        return handler(session, args)

    def _cmd_pwd(self, session: Session, args) -> str:
        return session.cwd

    def _cmd_whoami(self, session: Session, args) -> str:
        return self.fs.user

    def _cmd_id(self, session: Session, args) -> str:
        u = self.fs.user
        return f"uid=1000({u}) gid=1000({u}) groups=1000({u}),27(sudo)"

    def _cmd_uname(self, session: Session, args) -> str:
        return UNAME_A.format(host=self.fs.hostname) if "-a" in args else "Linux"

    def _cmd_help(self, session: Session, args) -> str:
        return HELP_TEXT

    def _cmd_exit(self, session: Session, args) -> str:
        session.closed = True
        return "logout"

    def _cmd_cd(self, session: Session, args) -> str:
        target = resolve(session.cwd, args[0]) if args else self.fs.home
        node = self.fs.get(target)
        if node is None:
            return f"sh: cd: {args[0]}: No such file or directory"
        if not isinstance(node, VirtualDir):
            return f"sh: cd: {args[0]}: Not a directory"
        session.cwd = target
        return ""

    def _cmd_ls(self, session: Session, args) -> str:
        flags = "".join(a[1:] for a in args if a.startswith("-"))
        paths = [a for a in args if not a.startswith("-")] or ["."]
        out = []
        for p in paths:
            full = resolve(session.cwd, p)
            node = self.fs.get(full)
            if node is None:
                out.append(f"ls: cannot access '{p}': No such file or directory")
                continue
            if isinstance(node, VirtualFile):
                out.append(_long_entry(p, node) if "l" in flags else p)
                continue
            with self.fs.lock:
                names = sorted(n for n in node.children if "a" in flags or not n.startswith("."))
                if "l" in flags:
                    out.extend(_long_entry(n, node.children[n]) for n in names)
                else:
                    out.append("  ".join(names))
        return "\n".join(out)

    def _cmd_cat(self, session: Session, args) -> str:
        out = []
        for p in args:
            try:
                out.append(read_file_stalled(self.fs, p, self.staller, session.cwd).rstrip("\n"))
            except FileNotFoundError:
                out.append(f"cat: {p}: No such file or directory")
            except IsADirectoryError:
                out.append(f"cat: {p}: Is a directory")
        return "\n".join(out)
