"""In-memory filesystem tree served to honeypot visitors.

Paths are always resolved inside the tree: ``..`` at the root stays at the
root, so no lookup can name anything outside it.
"""

from __future__ import annotations

import datetime as dt
import json
import posixpath
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

EPOCH = dt.datetime(2024, 5, 1, 8, 0, tzinfo=dt.timezone.utc)


@dataclass
class VirtualFile:
    name: str
    content: bytes
    mtime: dt.datetime = EPOCH
    ctime: dt.datetime = EPOCH
    protected: bool = False


@dataclass
class VirtualDir:
    name: str
    children: dict[str, "VirtualDir | VirtualFile"] = field(default_factory=dict)
    mtime: dt.datetime = EPOCH


def resolve(cwd: str, path: str) -> str:
    """Absolute, normalized path; ``..`` is clamped at ``/``."""
    joined = path if path.startswith("/") else f"{cwd.rstrip('/')}/{path}"
    parts: list[str] = []
    for seg in joined.split("/"):
        if seg in ("", "."):
            continue
        if seg == "..":
            if parts:
                parts.pop()
            continue
        parts.append(seg)
    return "/" + "/".join(parts)


class VirtualFs:
    def __init__(self, home: str = "/home/admin", user: str = "admin", hostname: str = "fileserver-02"):
        self.root = VirtualDir("")
        self.home = home
        self.user = user
        self.hostname = hostname
        self.lock = threading.RLock()

    # -- lookup -----------------------------------------------------------
    def _walk(self, path: str):
        node: VirtualDir | VirtualFile = self.root
        for seg in resolve("/", path).strip("/").split("/"):
            if not seg:
                continue
            if not isinstance(node, VirtualDir) or seg not in node.children:
                return None
            node = node.children[seg]
        return node

    def get(self, path: str):
        with self.lock:
            return self._walk(path)

    def is_dir(self, path: str) -> bool:
        return isinstance(self.get(path), VirtualDir)

    def is_file(self, path: str) -> bool:
        return isinstance(self.get(path), VirtualFile)

    def listdir(self, path: str) -> list[str]:
        with self.lock:
            node = self._walk(path)
            if not isinstance(node, VirtualDir):
                raise NotADirectoryError(path)
            return sorted(node.children)

    def files(self) -> Iterator[tuple[str, VirtualFile]]:
        """Snapshot of every (path, file) pair."""
        with self.lock:
            out = []
            stack: list[tuple[str, VirtualDir]] = [("", self.root)]
            while stack:
                prefix, d = stack.pop()
                for name, child in d.children.items():
                    p = f"{prefix}/{name}"
                    if isinstance(child, VirtualDir):
                        stack.append((p, child))
                    else:
                        out.append((p, child))
        return iter(sorted(out))

    # -- mutation ---------------------------------------------------------
    def mkdirs(self, path: str, when: dt.datetime = EPOCH) -> VirtualDir:
        with self.lock:
            node = self.root
            for seg in resolve("/", path).strip("/").split("/"):
                if not seg:
                    continue
                child = node.children.get(seg)
                if child is None:
                    child = node.children[seg] = VirtualDir(seg, mtime=when)
                elif not isinstance(child, VirtualDir):
                    raise NotADirectoryError(path)
                node = child
            return node

    def write_file(self, path: str, content: bytes | str, protected: bool | None = None,
                   when: dt.datetime = EPOCH) -> VirtualFile:
        if isinstance(content, str):
            content = content.encode("utf-8")
        full = resolve("/", path)
        parent_path, name = posixpath.split(full)
        if not name:
            raise IsADirectoryError(path)
        with self.lock:
            parent = self.mkdirs(parent_path, when)
            existing = parent.children.get(name)
            if isinstance(existing, VirtualDir):
                raise IsADirectoryError(path)
            if existing is None:
                f = VirtualFile(name, content, when, when, bool(protected))
                parent.children[name] = f
            else:
                f = existing
                f.content, f.mtime = content, when
                if protected is not None:
                    f.protected = protected
            parent.mtime = when
            return f

    def append(self, path: str, content: bytes | str, when: dt.datetime = EPOCH) -> VirtualFile:
        if isinstance(content, str):
            content = content.encode("utf-8")
        with self.lock:
            node = self._walk(path)
            if node is None:
                return self.write_file(path, content, when=when)
            if not isinstance(node, VirtualFile):
                raise IsADirectoryError(path)
            node.content += content
            node.mtime = when
            return node

    def touch(self, path: str, when: dt.datetime) -> None:
        with self.lock:
            node = self._walk(path)
            if node is None:
                raise FileNotFoundError(path)
            node.mtime = when

    def protect_all(self) -> int:
        with self.lock:
            count = 0
            for _, f in self.files():
                f.protected = True
                count += 1
            return count

    # -- seeding ----------------------------------------------------------
    @classmethod
    def from_seed(cls, seed: dict) -> "VirtualFs":
        fs = cls(seed.get("home", "/home/admin"), seed.get("user", "admin"), seed.get("hostname", "fileserver-02"))
        for entry in seed["files"]:
            fs.write_file(entry["path"], entry.get("content", ""), bool(entry.get("protected", False)))
        fs.mkdirs(fs.home)
        return fs

    @classmethod
    def from_seed_file(cls, path: str | Path | None = None) -> "VirtualFs":
        if path is None:
            text = resources.files("siren.data").joinpath("fs_seed.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_seed(json.loads(text))
