"""Model-facing feature table: encoding, splitting and CSV export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateClass, SchemaMismatch, TooFewRows
from .shots import ShotRecord

CONTINUOUS = ("minute", "distance_to_goal", "angle_to_goal")
ONEHOT = ("home_away", "situation", "shot_type", "last_action")
LEVEL_SEP = "="


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "continuous" | "onehot"
    source: str

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "source": self.source}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["kind"], d["source"])


def column_name(source: str, level: Optional[str] = None) -> str:
    return source if level is None else f"{source}{LEVEL_SEP}{level}"


def decode_column_name(name: str) -> tuple[str, Optional[str]]:
    source, sep, level = name.partition(LEVEL_SEP)
    return (source, level) if sep else (source, None)


@dataclass
class FeatureTable:
    """Encoded numeric matrix with labels and per-row shot ids.

    ``partition`` tags where the rows came from ("all", "train", "test");
    balancing and fitting refuse tables tagged "test".
    """

    columns: tuple[Column, ...]
    X: np.ndarray
    labels: np.ndarray
    row_keys: tuple[str, ...]
    partition: str = "all"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.X = np.asarray(self.X, dtype=np.float64).reshape(len(self.row_keys), len(self.columns))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.row_keys = tuple(self.row_keys)
        if not (len(self.X) == len(self.labels) == len(self.row_keys)):
            raise ValueError("rows, labels and row_keys differ in length")

    @property
    def n(self) -> int:
        return len(self.row_keys)

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def continuous_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if c.kind == "continuous"]

    def groups(self) -> dict[str, list[int]]:
        """One-hot source name -> column indices of its levels."""
        out: dict[str, list[int]] = {}
        for i, c in enumerate(self.columns):
            if c.kind == "onehot":
                out.setdefault(c.source, []).append(i)
        return out

    def take(self, idx, partition: Optional[str] = None) -> "FeatureTable":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureTable(
            self.columns, self.X[idx], self.labels[idx],
            tuple(self.row_keys[i] for i in idx),
            partition=self.partition if partition is None else partition,
            meta=dict(self.meta),
        )

    def schema(self) -> list[dict]:
        return [c.to_dict() for c in self.columns]

    def to_csv(self, path) -> None:
        """Write rows as CSV and the column metadata as ``<path>.json``."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["shot_id", *self.column_names, "status"])
            for key, row, y in zip(self.row_keys, self.X, self.labels):
                w.writerow([key, *(repr(float(v)) for v in row), int(y)])
        sidecar = {"columns": self.schema(), "n": self.n, "partition": self.partition}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")

    @classmethod
    def from_csv(cls, path) -> "FeatureTable":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        columns = [Column.from_dict(c) for c in sidecar["columns"]]
        keys, rows, labels = [], [], []
        with path.open(newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[1:-1] != [c.name for c in columns]:
                raise SchemaMismatch(f"{path}: header disagrees with sidecar")
            for rec in r:
                keys.append(rec[0])
                rows.append([float(v) for v in rec[1:-1]])
                labels.append(int(rec[-1]))
        return cls(columns, np.array(rows).reshape(len(keys), len(columns)), labels, keys,
                   partition=sidecar.get("partition", "all"))


def build_schema(records: Sequence[ShotRecord]) -> list[Column]:
    cols = [Column(name, "continuous", name) for name in CONTINUOUS]
    for source in ONEHOT:
        for level in sorted({getattr(r, source) for r in records}):
            cols.append(Column(column_name(source, level), "onehot", source))
    return cols


def encode_features(records: Sequence[ShotRecord], schema: Optional[Iterable] = None) -> FeatureTable:
    """Encode derived shot records into a FeatureTable.

    Without ``schema`` the one-hot levels are learned from ``records``. With a
    schema (prediction path) levels missing from it encode as an all-zero group.
    """
    records = list(records)
    if schema is None:
        columns = build_schema(records)
    else:
        columns = [c if isinstance(c, Column) else Column.from_dict(c) for c in schema]
        names = {c.name for c in columns}
        for name in CONTINUOUS:
            if name not in names:
                raise SchemaMismatch(f"schema lacks continuous column {name!r}")
    lookup = {c.name: i for i, c in enumerate(columns)}
    X = np.zeros((len(records), len(columns)))
    for r, rec in enumerate(records):
        if not rec.has_geometry:
            raise SchemaMismatch(f"shot {rec.shot_id} has no derived features")
        for name in CONTINUOUS:
            X[r, lookup[name]] = float(getattr(rec, name))
        for source in ONEHOT:
            j = lookup.get(column_name(source, getattr(rec, source)))
            if j is not None:
                X[r, j] = 1.0
    return FeatureTable(columns, X, [rec.status for rec in records], [rec.shot_id for rec in records])


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_test(table: FeatureTable, test_fraction: float = 0.2, seed: int = 0):
    """Stratified train/test split; returns (train, test) in original row order."""
    if table.n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {table.n}")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    classes = [np.flatnonzero(table.labels == c) for c in (0, 1)]
    for c, idx in enumerate(classes):
        if len(idx) < 2:
            raise DegenerateClass(f"class {c} has {len(idx)} rows")
    # largest-remainder allocation so the total matches round(n * fraction)
    exact = [len(idx) * test_fraction for idx in classes]
    counts = [int(math.floor(e)) for e in exact]
    short = _round_half_up(table.n * test_fraction) - sum(counts)
    for c in sorted(range(2), key=lambda c: -(exact[c] - counts[c]))[:max(short, 0)]:
        counts[c] += 1
    rng = np.random.default_rng(seed)
    test_idx = []
    for idx, k in zip(classes, counts):
        test_idx.append(rng.permutation(idx)[:k])
    test_mask = np.zeros(table.n, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    train = table.take(np.flatnonzero(~test_mask), partition="train")
    test = table.take(np.flatnonzero(test_mask), partition="test")
    return train, test
