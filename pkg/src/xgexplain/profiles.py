"""Ceteris-paribus, aggregated and partial-dependence profiles.

A ceteris-paribus (CP) profile varies one feature of a single shot over a
grid while holding the rest fixed. Averaging the CP profiles of a group of
shots (a team in a match, a player over a season) gives the aggregated
profile; averaging over a whole table gives the partial-dependence profile.
All three go through ``aggregate_profiles`` so the identities between them
hold exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConstantFeature, EmptyGroup, OutOfGrid, SchemaMismatch, UnknownFeature, ZeroBaseline
from .features import Column, FeatureTable, column_name, decode_column_name
from .forest import predict_proba

DEFAULT_GRID_POINTS = 101
_CHUNK_ROWS = 200_000


@dataclass(frozen=True)
class FunctionModel:
    """Wrap a plain ``X -> probabilities`` function so it can be profiled."""

    column_schema: tuple
    fn: Callable[[np.ndarray], np.ndarray]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.column_schema]


def _predict(model, X):
    if isinstance(model, FunctionModel):
        return np.asarray(model.fn(X), dtype=np.float64)
    return predict_proba(model, X)


@dataclass(frozen=True)
class FeatureGrid:
    feature: str
    kind: str  # "continuous" | "categorical"
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("empty grid")
        if self.kind == "continuous":
            if any(b <= a for a, b in zip(self.points, self.points[1:])):
                raise ValueError("continuous grid must be strictly increasing")
        elif len(set(self.points)) != len(self.points):
            raise ValueError("categorical grid repeats a level")


@dataclass(frozen=True)
class ProfileCurve:
    feature: str
    grid: FeatureGrid
    values: np.ndarray
    k: int
    group_label: str

    def rows(self):
        for z, v in zip(self.grid.points, self.values):
            yield {"feature": self.feature, "z": z, "value": float(v), "k": self.k,
                   "group_label": self.group_label}

    def to_dict(self) -> dict:
        return {"feature": self.feature, "kind": self.grid.kind, "group_label": self.group_label,
                "k": self.k, "z": list(self.grid.points), "value": [float(v) for v in self.values]}


def _levels(columns: Sequence[Column], source: str) -> list[str]:
    return [decode_column_name(c.name)[1] for c in columns if c.kind == "onehot" and c.source == source]


def grid_for_feature(table: FeatureTable, feature: str, m: int = DEFAULT_GRID_POINTS) -> FeatureGrid:
    names = table.column_names
    if feature in names and table.columns[names.index(feature)].kind == "continuous":
        if m < 2:
            raise ValueError("a continuous grid needs at least 2 points")
        col = table.X[:, names.index(feature)]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            raise ConstantFeature(f"{feature} takes a single value")
        return FeatureGrid(feature, "continuous", np.linspace(lo, hi, m).tolist())
    levels = _levels(table.columns, feature)
    if levels:
        return FeatureGrid(feature, "categorical", levels)
    raise UnknownFeature(feature)


def _expand(model, rows: np.ndarray, grid: FeatureGrid) -> np.ndarray:
    """Stack one copy of every row per grid point: shape (k * m, d), member-major."""
    names = model.column_names
    m = len(grid.points)
    big = np.repeat(rows, m, axis=0)
    if grid.kind == "continuous":
        if grid.feature not in names:
            raise UnknownFeature(grid.feature)
        big[:, names.index(grid.feature)] = np.tile(np.asarray(grid.points, dtype=np.float64), len(rows))
    else:
        group = [i for i, c in enumerate(model.column_schema)
                 if c.kind == "onehot" and c.source == grid.feature]
        if not group:
            raise UnknownFeature(grid.feature)
        big[:, group] = 0.0
        for g, level in enumerate(grid.points):
            try:
                j = names.index(column_name(grid.feature, level))
            except ValueError:
                raise UnknownFeature(f"{grid.feature}={level}") from None
            big[g::m, j] = 1.0
    return big


def _matrix(model, group) -> np.ndarray:
    if isinstance(group, FeatureTable):
        if group.column_names != model.column_names:
            raise SchemaMismatch("group columns differ from the model schema")
        return group.X
    X = np.asarray(group, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.size and X.shape[1] != len(model.column_schema):
        raise SchemaMismatch(f"expected {len(model.column_schema)} columns, got {X.shape[1]}")
    return X


def aggregate_profiles(model, group: Union[FeatureTable, np.ndarray],
                       grid: FeatureGrid, group_label: str = "group") -> ProfileCurve:
    """Pointwise mean of the CP profiles of every row in ``group``."""
    X = _matrix(model, group)
    if len(X) == 0:
        raise EmptyGroup("cannot aggregate an empty group")
    m = len(grid.points)
    per_chunk = max(1, _CHUNK_ROWS // m)
    total = np.zeros(m)
    for start in range(0, len(X), per_chunk):
        block = X[start:start + per_chunk]
        preds = _predict(model, _expand(model, block, grid)).reshape(len(block), m)
        total += preds.sum(axis=0)
    return ProfileCurve(grid.feature, grid, total / len(X), len(X), group_label)


def cp_profile(model, observation, grid: FeatureGrid, label: str = "shot") -> ProfileCurve:
    obs = np.asarray(observation, dtype=np.float64)
    if obs.ndim != 1:
        raise SchemaMismatch("a CP profile takes a single encoded row")
    return aggregate_profiles(model, obs.reshape(1, -1), grid, label)


def pdp(model, table: FeatureTable, grid: FeatureGrid) -> ProfileCurve:
    return aggregate_profiles(model, table, grid, "ALL")


def interpolate(curve: ProfileCurve, z: float) -> float:
    if curve.grid.kind != "continuous":
        raise ValueError("interpolation needs a continuous grid")
    pts = curve.grid.points
    if not pts[0] <= z <= pts[-1]:
        raise OutOfGrid(f"{z} outside [{pts[0]}, {pts[-1]}]")
    return float(np.interp(z, pts, curve.values))


def what_if_ratio(curve: ProfileCurve, from_value: float, to_value: float) -> dict:
    """Relative change of the average per-shot xG when the feature moves from one value to another."""
    ap_from = interpolate(curve, from_value)
    ap_to = interpolate(curve, to_value)
    if ap_from == 0.0:
        raise ZeroBaseline(f"profile is 0 at {from_value}")
    ratio = ap_to / ap_from
    return {"feature": curve.feature, "group_label": curve.group_label,
            "from_value": from_value, "to_value": to_value,
            "ap_from": ap_from, "ap_to": ap_to, "ratio": ratio, "percent_change": 100.0 * (ratio - 1.0)}


CURVE_FIELDS = ("feature", "z", "value", "k", "group_label")


def write_curves_csv(curves: Sequence[ProfileCurve], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_FIELDS, lineterminator="\n")
        w.writeheader()
        for curve in curves:
            for row in curve.rows():
                w.writerow({**row, "value": repr(row["value"]),
                            "z": repr(float(row["z"])) if curve.grid.kind == "continuous" else row["z"]})


def write_curves_json(curves: Sequence[ProfileCurve], path) -> None:
    Path(path).write_text(json.dumps([c.to_dict() for c in curves], indent=1) + "\n", encoding="utf-8")
