"""Evaluation metrics for goal-probability models.

Metrics whose denominator vanishes return 0 and are listed in
``degenerate`` instead of raising, so a sampling sweep never aborts on a
model that predicts a single class.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptyInput, LengthMismatch, SingleClass

METRIC_NAMES = ("recall", "precision", "f1", "accuracy", "auc", "mcc",
                "brier", "log_loss", "balanced_accuracy", "mae")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0 or self.total < 1:
            raise ValueError(f"invalid confusion matrix {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _pair(probs, labels):
    p = np.asarray(probs, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(np.int64)
    if len(p) != len(y):
        raise LengthMismatch(f"{len(p)} probabilities vs {len(y)} labels")
    if len(p) == 0:
        raise LengthMismatch("no predictions")
    return p, y


def confusion_at_threshold(probs, labels, threshold: float = 0.5) -> ConfusionMatrix:
    """Goal is the positive class; a probability equal to the threshold counts as positive."""
    p, y = _pair(probs, labels)
    pred = p >= threshold
    pos = y == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)), fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)), tn=int(np.sum(~pred & ~pos)),
    )


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def threshold_metrics(cm: ConfusionMatrix) -> dict:
    flags: list[str] = []
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    recall = _ratio(tp, tp + fn, "recall", flags)
    precision = _ratio(tp, tp + fp, "precision", flags)
    f1 = _ratio(2 * tp, 2 * tp + fp + fn, "f1", flags)
    accuracy = (tp + tn) / cm.total
    if tp + fn == 0 or tn + fp == 0:
        flags.append("balanced_accuracy")
        balanced = 0.0
    else:
        balanced = (tp / (tp + fn) + tn / (tn + fp)) / 2
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = _ratio(tp * tn - fp * fn, math.sqrt(den), "mcc", flags)
    return {"recall": recall, "precision": precision, "f1": f1, "accuracy": accuracy,
            "balanced_accuracy": balanced, "mcc": mcc, "degenerate": flags}


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    # start of each run of tied values
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], len(xs)]
    avg = (starts + ends + 1) / 2.0  # mean of 1-based ranks start+1 .. end
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def auc(probs, labels) -> float:
    """Probability that a random goal outscores a random non-goal (ties count half)."""
    p, y = _pair(probs, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    r = _average_ranks(p)
    u = r[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def brier(probs, labels) -> float:
    p, y = _pair(probs, labels)
    return float(np.mean((p - y) ** 2))


def log_loss(probs, labels, eps: float = 1e-15) -> float:
    p, y = _pair(probs, labels)
    p = np.clip(p, eps, 1 - eps)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def match_mae(match_ids: Iterable, teams: Iterable, statuses: Iterable, probs: Iterable) -> float:
    """Mean over (match, team) of |cumulative xG - goals scored|."""
    xg = defaultdict(list)
    goals = defaultdict(int)
    rows = list(zip(match_ids, teams, statuses, probs))
    if not rows:
        raise EmptyInput("no shots")
    for m, t, s, p in rows:
        xg[(m, t)].append(float(p))
        goals[(m, t)] += int(s)
    errs = [abs(math.fsum(v) - goals[k]) for k, v in xg.items()]
    return math.fsum(errs) / len(errs)


@dataclass
class MetricReport:
    recall: float
    precision: float
    f1: float
    accuracy: float
    auc: float
    mcc: float
    brier: float
    log_loss: float
    balanced_accuracy: float
    mae: float
    threshold: float
    n: int
    degenerate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(probs, labels, threshold: float = 0.5, groups=None) -> MetricReport:
    """All ten metrics. ``groups`` is (match_ids, teams) for the per-match MAE;
    without it MAE is reported as NaN."""
    p, y = _pair(probs, labels)
    tm = threshold_metrics(confusion_at_threshold(p, y, threshold))
    flags = list(tm.pop("degenerate"))
    try:
        a = auc(p, y)
    except SingleClass:
        a = 0.0
        flags.append("auc")
    mae = match_mae(groups[0], groups[1], y, p) if groups is not None else float("nan")
    return MetricReport(auc=a, brier=brier(p, y), log_loss=log_loss(p, y), mae=mae,
                        threshold=threshold, n=len(p), degenerate=flags, **tm)
