"""Corpus ingestion, class statistics and stratified partitioning."""

from __future__ import annotations

import csv
import enum
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from siren.errors import DatasetError, InvalidUrlError, SplitError
from siren.features import N_FEATURES, extract_features

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.75, 0.15, 0.10)


class UrlClass(enum.IntEnum):
    BENIGN = 0
    DEFACEMENT = 1
    PHISHING = 2
    MALWARE = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "UrlClass":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label {text!r}") from None


N_CLASSES = len(UrlClass)


@dataclass(frozen=True)
class UrlRecord:
    url: str
    label: UrlClass


@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    retained: int
    dropped_empty: int
    dropped_unknown_label: int
    dropped_duplicate: int

    @property
    def dropped(self) -> int:
        return self.dropped_empty + self.dropped_unknown_label + self.dropped_duplicate


@dataclass(frozen=True)
class Corpus:
    records: tuple[UrlRecord, ...]
    report: IngestReport

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labels(self) -> np.ndarray:
        return np.fromiter((r.label for r in self.records), dtype=np.int64, count=len(self.records))


def load_csv(path: str | Path) -> Corpus:
    """Read a ``url,type`` CSV (column names case-insensitive).

    Rows with a blank URL or a label outside the four classes are dropped,
    as are exact duplicate URLs after the first occurrence.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8", errors="replace") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        cols = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in ("url", "type") if c not in cols]
        if missing:
            raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")
        iu, it = cols["url"], cols["type"]

        records: list[UrlRecord] = []
        seen: set[str] = set()
        n = empty = unknown = dup = 0
        for row in reader:
            if not row:
                continue
            n += 1
            url = row[iu].strip() if iu < len(row) else ""
            if not url:
                empty += 1
                continue
            try:
                label = UrlClass.parse(row[it] if it < len(row) else "")
            except ValueError:
                unknown += 1
                continue
            if url in seen:
                dup += 1
                continue
            seen.add(url)
            records.append(UrlRecord(url, label))

    if not records:
        raise DatasetError(f"{path}: no usable rows")
    report = IngestReport(n, len(records), empty, unknown, dup)
    logger.info("loaded %d records from %s (%d dropped)", len(records), path, report.dropped)
    return Corpus(tuple(records), report)


def save_csv(records: Iterable[UrlRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "type"])
        for r in records:
            writer.writerow([r.url, r.label.label])


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict[UrlClass, int]
    total: int

    @property
    def fractions(self) -> dict[UrlClass, float]:
        return {c: n / self.total for c, n in self.counts.items()}

    @property
    def majority(self) -> UrlClass:
        return max(self.counts, key=lambda c: (self.counts[c], -c))

    def table(self) -> list[tuple[str, int, float]]:
        return [(c.label, n, 100.0 * n / self.total) for c, n in self.counts.items()]


def class_distribution(records: Sequence[UrlRecord] | np.ndarray) -> ClassDistribution:
    labels = _labels_of(records)
    if len(labels) == 0:
        raise DatasetError("class distribution of an empty record set")
    tally = Counter(int(x) for x in labels)
    return ClassDistribution({c: tally.get(int(c), 0) for c in UrlClass}, len(labels))


def _labels_of(records) -> np.ndarray:
    if isinstance(records, np.ndarray):
        return records.astype(np.int64)
    if isinstance(records, Corpus):
        return records.labels
    return np.fromiter((int(r.label) for r in records), dtype=np.int64, count=len(records))


@dataclass(frozen=True)
class SplitSet:
    train: np.ndarray
    test: np.ndarray
    validation: np.ndarray
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": self.train.tolist(),
            "test": self.test.tolist(),
            "validation": self.validation.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "SplitSet":
        d = json.loads(text)
        as_idx = lambda k: np.asarray(d[k], dtype=np.int64)  # noqa: E731
        return cls(as_idx("train"), as_idx("test"), as_idx("validation"), int(d["seed"]), tuple(d["ratios"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitSet":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def largest_remainder(n: int, ratios: Sequence[float]) -> list[int]:
    """Apportion ``n`` items by ``ratios``; leftover units go to the largest fractional parts."""
    quotas = [n * r for r in ratios]
    sizes = [int(q) for q in quotas]
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def stratified_split(records, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> SplitSet:
    """Seeded per-class shuffle split into (train, test, validation) index arrays."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    labels = _labels_of(records)
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 3:
            raise SplitError(f"class {UrlClass(c).label} has {len(idx)} members; need at least 3")
        sizes = largest_remainder(len(idx), ratios)
        # every split must see every class
        for i in range(3):
            if sizes[i] == 0:
                donor = max(range(3), key=lambda j: sizes[j])
                sizes[donor] -= 1
                sizes[i] += 1
        idx = rng.permutation(idx)
        a, b = sizes[0], sizes[0] + sizes[1]
        parts[0].append(idx[:a])
        parts[1].append(idx[a:b])
        parts[2].append(idx[b:])
    train, test, val = (np.sort(np.concatenate(p)) for p in parts)
    return SplitSet(train, test, val, seed, ratios)


def stratified_kfold(records, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Partition indices into ``k`` folds, dealing each shuffled class round-robin."""
    if k < 2:
        raise SplitError("k must be at least 2")
    labels = _labels_of(records)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < k:
            raise SplitError(f"class {UrlClass(c).label} has {len(idx)} members; need at least {k}")
        for j, i in enumerate(rng.permutation(idx)):
            folds[(j + offset) % k].append(int(i))
        offset = (offset + len(idx)) % k
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def stratified_subsample(records, n: int, seed: int = 0) -> np.ndarray:
    """Indices of a class-proportional sample of size ``n`` (sorted)."""
    labels = _labels_of(records)
    if n >= len(labels):
        return np.arange(len(labels))
    classes, counts = np.unique(labels, return_counts=True)
    sizes = largest_remainder(n, counts / counts.sum())
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.flatnonzero(labels == c), size=s, replace=False)
              for c, s in zip(classes, sizes)]
    return np.sort(np.concatenate(picked))


@dataclass
class VectorizedData:
    X: np.ndarray
    Y: np.ndarray
    kept: np.ndarray
    dropped: int = 0
    labels: np.ndarray = field(init=False)

    def __post_init__(self):
        self.labels = self.Y.argmax(axis=1) if len(self.Y) else np.zeros(0, dtype=np.int64)


def one_hot(labels: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    out = np.zeros((len(labels), n_classes), dtype=np.float64)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def vectorize(records: Sequence[UrlRecord]) -> VectorizedData:
    """Feature matrix (n x 68) and one-hot labels (n x 4) for every extractable record."""
    rows: list[np.ndarray] = []
    labels: list[int] = []
    kept: list[int] = []
    for i, rec in enumerate(records):
        try:
            rows.append(extract_features(rec.url))
        except InvalidUrlError:
            continue
        labels.append(int(rec.label))
        kept.append(i)
    X = np.vstack(rows) if rows else np.zeros((0, N_FEATURES))
    dropped = len(records) - len(kept)
    if dropped:
        logger.info("vectorize: dropped %d unextractable records", dropped)
    return VectorizedData(X, one_hot(np.asarray(labels, dtype=np.int64)), np.asarray(kept, dtype=np.int64), dropped)
