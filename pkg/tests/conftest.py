import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from xgexplain.features import Column, FeatureTable
from xgexplain.shots import ShotRecord

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"
SAMPLE_CONFIG = ROOT / "sample" / "sample.json"


def make_record(**overrides) -> ShotRecord:
    base = ShotRecord(
        shot_id="s1", match_id="m1", league="Bundesliga", season="2020-21", date="2021-01-24",
        player="P. One", team="Home FC", home_away="home", minute=10, situation="OpenPlay",
        shot_type="RightFoot", last_action="Pass", coord_l=0.88, coord_w=0.5, result="MissedShots",
    )
    return replace(base, **overrides)


def imbalanced_table(n_neg=90, n_pos=10, seed=0, partition="train") -> FeatureTable:
    """Three continuous columns plus a two-level one-hot group; positives shifted closer."""
    rng = np.random.default_rng(seed)
    n = n_neg + n_pos
    y = np.r_[np.zeros(n_neg, dtype=int), np.ones(n_pos, dtype=int)]
    minute = rng.integers(1, 96, n).astype(float)
    dist = np.where(y == 1, rng.normal(10, 3, n), rng.normal(22, 6, n)).clip(1, 60)
    angle = np.where(y == 1, rng.normal(35, 8, n), rng.normal(18, 6, n)).clip(1, 90)
    head = (rng.random(n) < 0.2).astype(float)
    X = np.column_stack([minute, dist, angle, head, 1 - head])
    cols = [Column("minute", "continuous", "minute"),
            Column("distance_to_goal", "continuous", "distance_to_goal"),
            Column("angle_to_goal", "continuous", "angle_to_goal"),
            Column("shot_type=Head", "onehot", "shot_type"),
            Column("shot_type=RightFoot", "onehot", "shot_type")]
    keys = [f"r{i:06d}" for i in range(n)]
    return FeatureTable(cols, X, y, keys, partition=partition)


@pytest.fixture
def fixture_page() -> bytes:
    return (FIXTURES / "match_90001.html").read_bytes()


@pytest.fixture
def fixture_expected() -> dict:
    return json.loads((FIXTURES / "match_90001.expected.json").read_text(encoding="utf-8"))


def synthetic_table(n, seed=0):
    from xgexplain.features import encode_features
    from xgexplain.shots import derive_features
    from xgexplain.synth import synthetic_shots
    return encode_features(derive_features(synthetic_shots(n, seed=seed)))


# ------------------------------------------------------------ acceptance lines

ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores the verdict line for criterion n."""
    def record(n, ok, detail):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
