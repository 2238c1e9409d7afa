"""Merge per-stream event logs into a single archive with a summary manifest."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

from siren.honeypot.events import COMMAND, CONNECT, SessionEvent, read_log


@dataclass
class Manifest:
    session_count: int = 0
    event_count: int = 0
    span_start: str | None = None
    span_end: str | None = None
    command_histogram: dict[str, int] = field(default_factory=dict)
    kind_histogram: dict[str, int] = field(default_factory=dict)
    sources: list[str] = field(default_factory=list)


def build_manifest(events: list[SessionEvent], sources: list[str]) -> Manifest:
    if not events:
        return Manifest(sources=sources)
    commands = Counter(ev.payload.split()[0] for ev in events if ev.kind == COMMAND and ev.payload.split())
    blank = sum(1 for ev in events if ev.kind == COMMAND and not ev.payload.split())
    if blank:
        commands["<empty>"] = blank
    stamps = sorted(ev.timestamp for ev in events)
    return Manifest(
        session_count=len({ev.session_id for ev in events if ev.kind == CONNECT}),
        event_count=len(events),
        span_start=stamps[0].isoformat(timespec="microseconds"),
        span_end=stamps[-1].isoformat(timespec="microseconds"),
        command_histogram=dict(sorted(commands.items())),
        kind_histogram=dict(sorted(Counter(ev.kind for ev in events).items())),
        sources=sources,
    )


def export_sessions(log_dir: str | Path, archive_path: str | Path) -> Manifest:
    """Write ``archive_path``: one manifest line, then every event ordered by time."""
    log_dir = Path(log_dir)
    files = sorted(log_dir.glob("*.jsonl")) if log_dir.is_dir() else []
    archive_path = Path(archive_path)
    events: list[SessionEvent] = []
    for f in files:
        if f.resolve() != archive_path.resolve():
            events.extend(read_log(f))
    events.sort(key=lambda ev: (ev.timestamp, ev.session_id))
    manifest = build_manifest(events, [f.name for f in files if f.resolve() != archive_path.resolve()])
    with archive_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest": asdict(manifest)}) + "\n")
        for ev in events:
            fh.write(ev.to_line() + "\n")
    return manifest


def parse_archive(path: str | Path) -> tuple[Manifest, list[SessionEvent]]:
    with Path(path).open(encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty archive")
    manifest = Manifest(**json.loads(lines[0])["manifest"])
    return manifest, [SessionEvent.from_line(line) for line in lines[1:]]
