"""Acceptance suite: one verdict line per criterion (see the terminal summary)."""

import hashlib
import math
import os
import shutil
import subprocess
import sys
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xgexplain.balancing import BalanceConfig, balance
from xgexplain.errors import MalformedJson, PayloadNotFound, UnknownEnum
from xgexplain.features import encode_features, split_train_test
from xgexplain.forest import ForestParams, fit_forest, load_model, predict_proba, save_model
from xgexplain.metrics import METRIC_NAMES, auc, evaluate, threshold_metrics, ConfusionMatrix
from xgexplain.profiles import (FeatureGrid, FunctionModel, aggregate_profiles, cp_profile, grid_for_feature,
                                pdp, write_curves_csv)
from xgexplain.report import match_reports, scored_frame, xg_sum
from xgexplain.shots import compute_angle, compute_distance, derive_features
from xgexplain.svg import emit_curve_svg
from xgexplain.synth import synthetic_shots
from xgexplain.understat import normalize, parse_embedded_shots

import oracles
from conftest import ROOT, SAMPLE_CONFIG, imbalanced_table

N_TREES = 100


@pytest.fixture(scope="module")
def corpus():
    """20,000 synthetic shots from the logistic law, split 80/20."""
    records = derive_features(synthetic_shots(20_000, seed=2024))
    table = encode_features(records)
    train, test = split_train_test(table, 0.2, seed=0)
    return records, table, train, test


@pytest.fixture(scope="module")
def models(corpus):
    _, _, train, _ = corpus
    out, seconds = {}, {}
    for method in ("none", "over_smoothed", "under"):
        t0 = time.perf_counter()
        bal = balance(train, BalanceConfig(method, seed=1))
        out[method] = fit_forest(bal, ForestParams(n_trees=N_TREES), seed=0, balance_method=method)
        seconds[method] = time.perf_counter() - t0
    return out, seconds


# --------------------------------------------------------------------- 1

def test_criterion_1_transform_exactness(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    L, W = rng.random(10_000), rng.random(10_000)
    worst_d = worst_a = 0.0
    in_range = True
    for l, w in zip(L, W):
        x, y = 105 - 105 * l, 32.5 - 68 * w
        d, a = compute_distance(l, w), compute_angle(l, w)
        worst_d = max(worst_d, abs(d - math.hypot(x, y)))
        oracle = math.degrees(abs(math.atan2(y + 3.66, x) - math.atan2(y - 3.66, x)))
        if x * x + y * y <= 3.66 ** 2:
            oracle = 180.0 - oracle  # inside the mouth circle the folded angle is the supplement
        worst_a = max(worst_a, abs(a - oracle))
        in_range &= 0.0 < a <= 90.0
    elapsed = time.perf_counter() - t0
    penalty = compute_angle(94 / 105, 32.5 / 68)
    closed_form = math.degrees(math.atan(80.52 / 107.6044))
    core = worst_d <= 1e-9 and worst_a <= 1e-9 and in_range and abs(penalty - closed_form) <= 1e-9 and elapsed < 1.0
    literal = abs(penalty - 36.8699) <= 1e-4
    acceptance(1, core and literal,
               f"max |dist err| {worst_d:.1e}, max |angle err| {worst_a:.1e}, all angles in (0, 90]: {in_range}, "
               f"{elapsed:.2f}s; penalty angle {penalty:.5f} equals arctan(80.52/107.6044) but the stated "
               f"36.8699 (= atan(3/4)) is off by {abs(penalty - 36.8699):.4f}")
    assert core
    if not literal:
        pytest.xfail("stated penalty-spot value 36.8699 is atan(0.75); the goal-mouth formula gives 36.80738")


# --------------------------------------------------------------------- 2

def test_criterion_2_metric_oracles(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 40))
        p = np.round(rng.random(n), int(rng.integers(1, 4)))
        y = rng.integers(0, 2, n)
        y[rng.integers(1, n)] = 1 - y[0]  # both classes present
        m = rng.integers(0, 3, n).astype(str)
        t = rng.choice(["H", "A"], n)
        thr = float(np.round(rng.random(), 1))
        got = evaluate(p, y, thr, groups=(m, t)).to_dict()
        want = oracles.all_metrics(p.tolist(), y.tolist(), thr, m.tolist(), t.tolist())
        worst = max(worst, max(abs(got[k] - want[k]) for k in METRIC_NAMES))
    elapsed = time.perf_counter() - t0
    example = auc([0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0])
    hand = threshold_metrics(ConfusionMatrix(3, 1, 1, 5))
    hand_ok = (abs(hand["balanced_accuracy"] - 19 / 24) < 1e-15 and abs(hand["mcc"] - 7 / 12) < 1e-15
               and hand["precision"] == hand["recall"] == 0.75 and hand["accuracy"] == 0.8)
    ok = worst <= 1e-12 and example == 0.75 and hand_ok and elapsed < 30
    acceptance(2, ok, f"10,000 fuzzed cases, max deviation {worst:.1e}; AUC example {example}; "
                      f"hand cases {'match' if hand_ok else 'differ'}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------- 3

def test_criterion_3_balancing(acceptance):
    t0 = time.perf_counter()
    table = imbalanced_table(9000, 1000, seed=0, partition="all")
    train, test = split_train_test(table, 0.2, seed=0)
    before = (test.X.tobytes(), test.labels.tobytes(), test.row_keys)
    fractions = {}
    for method in ("under", "over_duplicate", "over_smoothed"):
        out = balance(train, BalanceConfig(method, seed=3))
        fractions[method] = out.labels.mean()
    untouched = before == (test.X.tobytes(), test.labels.tobytes(), test.row_keys)
    smooth = balance(train, BalanceConfig("over_smoothed", seed=3))
    syn = smooth.X[train.n:]
    minority = train.X[train.labels == 1]
    z = [abs(syn[:, j].mean() - minority[:, j].mean()) / (syn[:, j].std(ddof=1) / math.sqrt(len(syn)))
         for j in train.continuous_indices()]
    elapsed = time.perf_counter() - t0
    ok = all(abs(f - 0.5) <= 0.02 for f in fractions.values()) and untouched and max(z) <= 3 and elapsed < 10
    acceptance(3, ok, "minority fractions " + ", ".join(f"{k} {v:.3f}" for k, v in fractions.items())
               + f"; test partition unchanged: {untouched}; synthetic means within {max(z):.2f} SE; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------- 4

@pytest.mark.slow
def test_criterion_4_directional_sampling_effect(acceptance, corpus, models):
    _, table, _, test = corpus
    fitted, seconds = models
    rate = table.labels.mean()
    res = {}
    for method in ("none", "over_smoothed"):
        res[method] = evaluate(predict_proba(fitted[method], test), test.labels, 0.5)
    orig, over = res["none"], res["over_smoothed"]
    a = over.recall - orig.recall >= 0.25
    b = over.balanced_accuracy >= 0.80
    c = orig.brier <= over.brier
    elapsed = seconds["none"] + seconds["over_smoothed"]
    ok = a and b and c and elapsed < 300 and 0.08 <= rate <= 0.12
    acceptance(4, ok, f"{rate:.1%} goals; recall {orig.recall:.3f} -> {over.recall:.3f} "
                      f"(+{over.recall - orig.recall:.3f}); over-sampled balanced accuracy "
                      f"{over.balanced_accuracy:.3f}; Brier {orig.brier:.4f} (original) vs {over.brier:.4f}; "
                      f"fit {elapsed:.0f}s at {N_TREES} trees")
    assert ok


# --------------------------------------------------------------------- 5

@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1), st.integers(0, 4),
                          st.floats(0.0, 1.0, allow_nan=False)), min_size=1, max_size=60))
def _match_equals_player_sum(rows):
    df = pd.DataFrame({"match_id": [f"m{r[0]}" for r in rows], "team": [f"T{r[1]}" for r in rows],
                       "home_away": ["home" if r[1] == 0 else "away" for r in rows],
                       "player": [f"T{r[1]}-p{r[2]}" for r in rows], "status": 0,
                       "angle_to_goal": 20.0, "distance_to_goal": 15.0, "xg": [r[3] for r in rows]})
    for _, row in match_reports(df).iterrows():
        shots = df[(df["match_id"] == row["match_id"]) & (df["team"] == row["team"])]
        players = math.fsum(xg_sum(g["xg"]) for _, g in shots.groupby("player"))
        assert abs(row["xg"] - players) <= 1e-12


def test_criterion_5_additivity(acceptance):
    example = xg_sum([0.50, 0.20, 0.05])
    _match_equals_player_sum()
    records = derive_features(synthetic_shots(3000, seed=9))
    df = scored_frame(records, np.random.default_rng(0).random(len(records)))
    worst = 0.0
    for _, row in match_reports(df).iterrows():
        shots = df[(df["match_id"] == row["match_id"]) & (df["team"] == row["team"])]
        worst = max(worst, abs(row["xg"] - math.fsum(xg_sum(g["xg"]) for _, g in shots.groupby("player"))))
    ok = example == 0.75 and worst <= 1e-12
    acceptance(5, ok, f"xg_sum(0.50, 0.20, 0.05) = {example!r}; match xG vs summed player xG max gap "
                      f"{worst:.1e} on a 3,000-shot corpus plus generated datasets")
    assert ok


# --------------------------------------------------------------------- 6

def test_criterion_6_profile_identities(acceptance):
    t0 = time.perf_counter()
    table = encode_features(derive_features(synthetic_shots(1500, seed=6)))
    train = table.take(np.arange(table.n), "train")
    model = fit_forest(train, ForestParams(n_trees=30), seed=0)
    grid = grid_for_feature(table, "distance_to_goal", 101)
    checks = {}
    checks["AP(k=1) = CP"] = all(np.array_equal(aggregate_profiles(model, table.X[i:i + 1], grid).values,
                                                cp_profile(model, table.X[i], grid).values) for i in range(5))
    checks["PDP = AP(all)"] = np.array_equal(pdp(model, table, grid).values,
                                             aggregate_profiles(model, table.X, grid).values)
    a, b = cp_profile(model, table.X[0], grid).values, cp_profile(model, table.X[1], grid).values
    union = aggregate_profiles(model, table.X[:2], grid).values
    g1, g2 = table.X[:700], table.X[700:]
    whole = aggregate_profiles(model, table.X, grid).values
    parts = (700 * aggregate_profiles(model, g1, grid).values
             + (table.n - 700) * aggregate_profiles(model, g2, grid).values) / table.n
    checks["union linearity"] = (np.max(np.abs(union - (a + b) / 2)) <= 1e-12
                                 and np.max(np.abs(whole - parts)) <= 1e-12)
    obs = table.X[3]
    j = table.index_of("distance_to_goal")
    own = FeatureGrid("distance_to_goal", "continuous", sorted(set(grid.points) | {obs[j]}))
    checks["CP at own value"] = (cp_profile(model, obs, own).values[own.points.index(obs[j])]
                                 == predict_proba(model, obs)[0])
    mono = FunctionModel(table.columns, lambda X: 1 / (1 + np.exp(-(3 - 0.25 * X[:, j]))))
    checks["monotone PDP decreasing"] = bool(np.all(np.diff(pdp(mono, table, grid).values) < 0))
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 60
    acceptance(6, ok, ", ".join(f"{k}: {'ok' if v else 'BROKEN'}" for k, v in checks.items())
               + f"; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------- 7

@pytest.mark.slow
def test_criterion_7_sampling_pdp_comparison(acceptance, corpus, models, tmp_path):
    _, table, _, test = corpus
    fitted, _ = models
    rows = test.X[np.sort(np.random.default_rng(0).choice(test.n, 1000, replace=False))]
    grid = grid_for_feature(table, "distance_to_goal", 101)
    curves = [aggregate_profiles(m, rows, grid, f"sampling={method}") for method, m in fitted.items()]
    svg = emit_curve_svg(curves, tmp_path / "sampling_pdp.svg", title="PDP by sampling strategy")
    write_curves_csv(curves, tmp_path / "sampling_pdp.csv")
    polylines = ET.parse(svg).getroot().findall("{http://www.w3.org/2000/svg}polyline")
    csv_rows = len((tmp_path / "sampling_pdp.csv").read_text().splitlines()) - 1
    diffs = {f"{curves[i].group_label} vs {curves[k].group_label}":
             float(np.max(np.abs(curves[i].values - curves[k].values)))
             for i in range(3) for k in range(i + 1, 3)}
    ok = len(polylines) == 3 and csv_rows == 303 and min(diffs.values()) > 0.01
    acceptance(7, ok, f"one SVG with {len(polylines)} curves and a {csv_rows}-row CSV; max |diff| "
               + ", ".join(f"{k}: {v:.3f}" for k, v in diffs.items()))
    assert ok


# --------------------------------------------------------------------- 8

def test_criterion_8_provider_fixture(acceptance, fixture_page, fixture_expected):
    raw = parse_embedded_shots(fixture_page)
    got = []
    for r in raw:
        d = normalize(r, fixture_expected["league"]).__dict__.copy()
        d.pop("distance_to_goal")
        d.pop("angle_to_goal")
        got.append(d)
    equal = got == fixture_expected["records"]
    first_xy = [raw[0].x, raw[0].y] == fixture_expected["first_shot_raw_xy"]
    typed = []
    for page, err in ((b"<html>no shots here</html>", PayloadNotFound),
                      (fixture_page.replace(b"\\x5D\\x7D')", b"')"), MalformedJson)):
        try:
            parse_embedded_shots(page)
            typed.append(False)
        except err:
            typed.append(True)
    try:
        normalize(raw[0].__class__(**{**raw[0].__dict__, "situation": "Volley"}))
        typed.append(False)
    except UnknownEnum:
        typed.append(True)
    ok = len(raw) == fixture_expected["shot_count"] and equal and first_xy and all(typed)
    acceptance(8, ok, f"{len(raw)} shots parsed offline (expected {fixture_expected['shot_count']}); "
                      f"field-level match: {equal}; malformed inputs raise typed errors: {all(typed)}")
    assert ok


# --------------------------------------------------------------------- 9

def _digest(out: Path) -> dict:
    return {str(p.relative_to(out)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.rglob("*")) if p.suffix in (".csv", ".json")}


@pytest.mark.slow
def test_criterion_9_end_to_end_determinism(acceptance, tmp_path):
    xg = shutil.which("xg")
    cmd = [xg] if xg else [sys.executable, "-m", "xgexplain.cli"]
    timings, digests = [], []
    for i in range(2):
        out = tmp_path / f"run{i}"
        t0 = time.perf_counter()
        r = subprocess.run(cmd + ["run", "--config", str(SAMPLE_CONFIG), "--out", str(out)],
                           capture_output=True, text=True, cwd=ROOT, env={**os.environ})
        timings.append(time.perf_counter() - t0)
        assert r.returncode == 0, r.stderr
        digests.append(_digest(out))
    same = digests[0] == digests[1]
    ok = same and max(timings) < 60 and len(digests[0]) > 10
    acceptance(9, ok, f"{len(digests[0])} CSV/JSON artifacts byte-identical across two runs: {same}; "
                      f"runs took {timings[0]:.1f}s and {timings[1]:.1f}s")
    assert ok


# -------------------------------------------------------------------- 10

@pytest.mark.slow
def test_criterion_10_model_persistence(acceptance, corpus, models, tmp_path):
    _, table, _, _ = corpus
    model = models[0]["over_smoothed"]
    save_model(model, tmp_path / "model.json")
    back = load_model(tmp_path / "model.json")
    rows = table.X[:1000]
    a, b = predict_proba(model, rows), predict_proba(back, rows)
    ok = a.tobytes() == b.tobytes()
    acceptance(10, ok, f"{N_TREES}-tree forest saved and reloaded: predictions on 1,000 rows bit-identical: {ok}")
    assert ok
