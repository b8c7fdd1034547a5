"""Tree ensembles: bagged random forests and logistic-loss gradient boosting.

Both learners are deterministic for a fixed seed. Forest trees draw their
bootstrap bags from per-tree generators seeded with ``(seed, tree_index)``
over rows put in a canonical order (sorted by shot id), so neither the
schedule nor the input row order changes the fitted model.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import (CorruptModel, DegenerateClass, EmptyTable, PartitionError,
                     SchemaMismatch, SchemaVersionMismatch)
from .features import Column, FeatureTable
from .tree import Tree, build_tree

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    mtry: Optional[int] = None  # None -> ceil(sqrt(d))
    min_leaf: int = 1
    max_depth: Optional[int] = None
    bootstrap: bool = True
    vote_mode: str = "hard_vote"  # or "leaf_prob"

    def resolved_mtry(self, d: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(math.sqrt(d))
        if not 1 <= m <= d:
            raise ValueError(f"mtry={m} outside [1, {d}]")
        return m


@dataclass(frozen=True)
class GbtParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 6
    min_leaf: int = 20
    subsample: float = 1.0


@dataclass(frozen=True)
class EnsembleModel:
    kind: str  # "random_forest" | "gbt"
    trees: tuple[Tree, ...]
    column_schema: tuple[Column, ...]
    hyperparams: Union[ForestParams, GbtParams]
    train_meta: dict = field(default_factory=dict)
    init_score: float = 0.0  # gbt only: log-odds of the class prior

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.column_schema]


def _check_trainable(table: FeatureTable):
    if table.partition == "test":
        raise PartitionError("refusing to fit on the test partition")
    if table.n == 0:
        raise EmptyTable("empty training table")
    pos = int(table.labels.sum())
    if pos == 0 or pos == table.n:
        raise DegenerateClass("training table has a single class")


def fit_tree(table: FeatureTable, params: ForestParams = ForestParams(),
             rng: Optional[np.random.Generator] = None) -> Tree:
    """Grow one unpruned CART classification tree on every row of ``table``."""
    if table.n == 0:
        raise EmptyTable("empty table")
    if table.n < 2 * params.min_leaf:
        raise EmptyTable(f"{table.n} rows cannot hold two leaves of {params.min_leaf}")
    return build_tree(
        table.X, table.labels, gini=True, min_leaf=params.min_leaf,
        max_depth=params.max_depth, mtry=params.resolved_mtry(table.d),
        rng=rng if rng is not None else np.random.default_rng(0),
    )


def canonical_order(table: FeatureTable) -> np.ndarray:
    return np.array(sorted(range(table.n), key=table.row_keys.__getitem__), dtype=np.int64)


def fit_forest(table: FeatureTable, params: ForestParams = ForestParams(), seed: int = 0,
               balance_method: str = "none") -> EnsembleModel:
    _check_trainable(table)
    order = canonical_order(table)
    X, y = table.X[order], table.labels[order]
    n = table.n
    mtry = params.resolved_mtry(table.d)
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng([seed, t])
        bag = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        trees.append(build_tree(X[bag], y[bag], gini=True, min_leaf=params.min_leaf,
                                max_depth=params.max_depth, mtry=mtry, rng=rng))
    meta = {"seed": seed, "n_train": n, "class_prior": float(y.mean()),
            "balance_method": balance_method}
    return EnsembleModel("random_forest", tuple(trees), table.columns, params, meta)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logistic_loss(y, score):
    # log(1 + exp(-s)) for y=1, log(1 + exp(s)) for y=0, computed stably
    s = np.where(y == 1, -score, score)
    return float(np.mean(np.logaddexp(0.0, s)))


def fit_gbt(table: FeatureTable, params: GbtParams = GbtParams(), seed: int = 0,
            balance_method: str = "none") -> EnsembleModel:
    """Gradient boosting on logistic loss with Newton-step leaf values.

    ``train_meta["loss_history"]`` records the training log-loss after every
    round (entry 0 is the prior-only model).
    """
    _check_trainable(table)
    if not 0.0 <= params.learning_rate <= 1.0:
        raise ValueError("learning_rate must lie in [0, 1]")
    order = canonical_order(table)
    X, y = table.X[order], table.labels[order].astype(np.float64)
    n = table.n
    prior = float(y.mean())
    init = math.log(prior / (1.0 - prior))
    score = np.full(n, init)
    history = [_logistic_loss(y, score)]
    trees = []
    rng = np.random.default_rng(seed)
    for _ in range(params.n_rounds if params.learning_rate > 0 else 0):
        p = sigmoid(score)
        grad = y - p
        hess = p * (1.0 - p)
        if params.subsample < 1.0:
            k = max(2 * params.min_leaf, int(round(params.subsample * n)))
            rows = np.sort(rng.choice(n, size=min(k, n), replace=False))
        else:
            rows = np.arange(n)
        g, h = grad[rows], hess[rows]
        tree = build_tree(
            X[rows], g, gini=False, min_leaf=params.min_leaf, max_depth=params.max_depth,
            leaf_value=lambda r: g[r].sum() / max(h[r].sum(), 1e-12),
        )
        trees.append(tree)
        score = score + params.learning_rate * tree.predict(X)
        history.append(_logistic_loss(y, score))
    meta = {"seed": seed, "n_train": n, "class_prior": prior,
            "balance_method": balance_method, "loss_history": history}
    return EnsembleModel("gbt", tuple(trees), table.columns, params, meta, init_score=init)


def _as_matrix(model: EnsembleModel, rows) -> np.ndarray:
    if isinstance(rows, FeatureTable):
        if rows.column_names != model.column_names:
            raise SchemaMismatch("table columns differ from the model schema")
        return rows.X
    X = np.asarray(rows, dtype=np.float64)
    if X.size == 0:
        return X.reshape(0, len(model.column_schema))
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != len(model.column_schema):
        raise SchemaMismatch(f"expected {len(model.column_schema)} columns, got shape {X.shape}")
    return X


def predict_proba(model: EnsembleModel, rows) -> np.ndarray:
    """Goal probability for every row.

    Forests in ``hard_vote`` mode return the share of trees whose leaf has a
    positive fraction above 0.5 (a leaf at exactly 0.5 casts half a vote);
    ``leaf_prob`` averages the leaf fractions. Boosted models return the
    sigmoid of the additive score.
    """
    X = _as_matrix(model, rows)
    if len(X) == 0:
        return np.zeros(0)
    if model.kind == "gbt":
        score = np.full(len(X), model.init_score)
        for tree in model.trees:
            score += model.hyperparams.learning_rate * tree.predict(X)
        return sigmoid(score)
    acc = np.zeros(len(X))
    hard = model.hyperparams.vote_mode == "hard_vote"
    for tree in model.trees:
        v = tree.predict(X)
        acc += (v > 0.5) + 0.5 * (v == 0.5) if hard else v
    return acc / len(model.trees)


# ------------------------------------------------------------ persistence

def _value_key(kind):
    return "value" if kind == "gbt" else "positive_fraction"


def model_to_dict(model: EnsembleModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "hyperparams": asdict(model.hyperparams),
        "column_schema": [c.to_dict() for c in model.column_schema],
        "init_score": model.init_score,
        "trees": [t.to_dict(_value_key(model.kind)) for t in model.trees],
        "train_meta": model.train_meta,
    }


def save_model(model: EnsembleModel, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips
    text = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> EnsembleModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptModel(f"{path}: {e}") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptModel(f"{path}: not a model document")
    if doc["format_version"] != FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: format_version {doc['format_version']!r}, expected {FORMAT_VERSION}")
    try:
        kind = doc["kind"]
        params_cls = GbtParams if kind == "gbt" else ForestParams
        if kind not in ("gbt", "random_forest"):
            raise CorruptModel(f"unknown model kind {kind!r}")
        return EnsembleModel(
            kind=kind,
            trees=tuple(Tree.from_dict(t, _value_key(kind)) for t in doc["trees"]),
            column_schema=tuple(Column.from_dict(c) for c in doc["column_schema"]),
            hyperparams=params_cls(**doc["hyperparams"]),
            train_meta=doc["train_meta"],
            init_score=float(doc["init_score"]),
        )
    except (KeyError, TypeError) as e:
        raise CorruptModel(f"{path}: {e}") from None
