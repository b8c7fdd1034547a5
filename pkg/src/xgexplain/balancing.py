"""Class rebalancing of a training table.

Three strategies: random under-sampling of the majority class, random
duplication of minority rows, and smoothed-bootstrap over-sampling, where each
synthetic minority row is a resampled original whose continuous columns are
jittered with Gaussian kernel noise. Only the minority class is augmented.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClass, PartitionError, ZeroVarianceWarning
from .features import FeatureTable

METHODS = ("none", "under", "over_duplicate", "over_smoothed")


@dataclass(frozen=True)
class BalanceConfig:
    method: str = "none"
    target_minority_fraction: float = 0.5
    seed: int = 0
    bandwidth_scale: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown balance method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.target_minority_fraction <= 0.5:
            raise ValueError("target_minority_fraction must be in (0, 0.5]")
        if self.bandwidth_scale < 0:
            raise ValueError("bandwidth_scale must be non-negative")


def _classes(table: FeatureTable):
    if table.partition == "test":
        raise PartitionError("balancing must only see the training partition")
    pos = np.flatnonzero(table.labels == 1)
    neg = np.flatnonzero(table.labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DegenerateClass("both classes must be present")
    return (pos, neg) if len(pos) <= len(neg) else (neg, pos)


def _round(x):
    return int(math.floor(x + 0.5))


def _append(table, extra_X, extra_y, extra_keys):
    return FeatureTable(
        table.columns,
        np.vstack([table.X, extra_X]),
        np.concatenate([table.labels, extra_y]),
        table.row_keys + tuple(extra_keys),
        partition=table.partition,
        meta=dict(table.meta),
    )


def undersample(train: FeatureTable, cfg: BalanceConfig) -> FeatureTable:
    minority, majority = _classes(train)
    f = cfg.target_minority_fraction
    keep = _round(len(minority) * (1 - f) / f)
    if keep >= len(majority):
        return train
    rng = np.random.default_rng(cfg.seed)
    chosen = rng.choice(majority, size=keep, replace=False)
    return train.take(np.sort(np.concatenate([minority, chosen])))


def _n_synthetic(minority, majority, f):
    return max(_round(len(majority) * f / (1 - f)) - len(minority), 0)


def _seed_rows(train, cfg):
    minority, majority = _classes(train)
    k = _n_synthetic(minority, majority, cfg.target_minority_fraction)
    rng = np.random.default_rng(cfg.seed)
    return minority, rng.choice(minority, size=k, replace=True), rng


def oversample_duplicate(train: FeatureTable, cfg: BalanceConfig) -> FeatureTable:
    _, seeds, _ = _seed_rows(train, cfg)
    if len(seeds) == 0:
        return train
    keys = [f"{train.row_keys[s]}#dup{j}" for j, s in enumerate(seeds)]
    return _append(train, train.X[seeds], train.labels[seeds], keys)


def silverman_bandwidth(column, n_class: int, d_cont: int) -> float:
    """Normal-reference kernel bandwidth for one column of a d_cont-variate sample."""
    if n_class < 2:
        raise DegenerateClass("bandwidth needs at least two rows")
    sigma = float(np.std(np.asarray(column, dtype=np.float64), ddof=1))
    return sigma * (4.0 / ((d_cont + 2) * n_class)) ** (1.0 / (d_cont + 4))


def oversample_smoothed(train: FeatureTable, cfg: BalanceConfig) -> FeatureTable:
    """Smoothed-bootstrap over-sampling of the minority class.

    Seed rows are drawn exactly as in ``oversample_duplicate`` (same seed, same
    draws), so ``bandwidth_scale=0`` reproduces it row for row. Jittered
    values are clipped to the column's range in the training table and one-hot
    columns are copied from the seed row.
    """
    minority, seeds, rng = _seed_rows(train, cfg)
    if len(minority) < 2:
        raise DegenerateClass("smoothed over-sampling needs at least two minority rows")
    if len(seeds) == 0:
        return train
    X_new = train.X[seeds].copy()
    cont = train.continuous_indices()
    if cfg.bandwidth_scale > 0 and cont:
        noise = rng.standard_normal((len(seeds), len(cont)))
        for c, j in enumerate(cont):
            h = cfg.bandwidth_scale * silverman_bandwidth(train.X[minority, j], len(minority), len(cont))
            if h == 0.0:
                warnings.warn(f"column {train.columns[j].name!r} is constant in the minority class",
                              ZeroVarianceWarning, stacklevel=2)
                continue
            lo, hi = train.X[:, j].min(), train.X[:, j].max()
            X_new[:, j] = np.clip(X_new[:, j] + h * noise[:, c], lo, hi)
    keys = [f"{train.row_keys[s]}#syn{j}" for j, s in enumerate(seeds)]
    return _append(train, X_new, train.labels[seeds], keys)


def balance(train: FeatureTable, cfg: BalanceConfig) -> FeatureTable:
    if cfg.method == "none":
        _classes(train)
        return train
    return {"under": undersample, "over_duplicate": oversample_duplicate,
            "over_smoothed": oversample_smoothed}[cfg.method](train, cfg)
