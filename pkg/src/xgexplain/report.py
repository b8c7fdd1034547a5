"""Per-shot xG tables and their match / player-season aggregates."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import EmptyGroup, MixedMatches, MixedPlayers
from .shots import ShotRecord

SCORED_COLUMNS = [
    "shot_id", "match_id", "league", "season", "date", "player", "team", "home_away",
    "minute", "situation", "shot_type", "last_action", "distance_to_goal",
    "angle_to_goal", "status", "xg",
]
MATCH_COLUMNS = ["match_id", "team", "goals", "xg", "shots", "mean_angle",
                 "mean_distance", "offensive_efficiency"]
PLAYER_COLUMNS = ["player", "season", "games", "goals", "xg", "shots", "mean_angle",
                  "mean_distance", "conversion", "offensive_efficiency"]


def scored_frame(records: Sequence[ShotRecord], probs: Iterable[float]) -> pd.DataFrame:
    """One row per shot with its derived geometry, outcome and model probability."""
    probs = np.asarray(list(probs), dtype=np.float64)
    if len(probs) != len(records):
        raise ValueError(f"{len(records)} shots but {len(probs)} probabilities")
    rows = [{**{c: getattr(r, c) for c in SCORED_COLUMNS[:-2]}, "status": r.status, "xg": float(p)}
            for r, p in zip(records, probs)]
    return pd.DataFrame(rows, columns=SCORED_COLUMNS)


def xg_sum(probs: Iterable[float]) -> float:
    """Cumulative expected goals of a group of shots."""
    probs = [float(p) for p in probs]
    if not probs:
        raise EmptyGroup("no shots in group")
    return math.fsum(probs)


def _aggregate(shots: pd.DataFrame) -> dict:
    goals = int(shots["status"].sum())
    xg = xg_sum(shots["xg"])
    return {
        "goals": goals,
        "xg": xg,
        "shots": len(shots),
        "mean_angle": math.fsum(shots["angle_to_goal"]) / len(shots),
        "mean_distance": math.fsum(shots["distance_to_goal"]) / len(shots),
        "offensive_efficiency": goals - xg,
    }


def match_report(shots: pd.DataFrame) -> pd.DataFrame:
    """End-of-match statistics, one row per team that took a shot."""
    if shots.empty:
        raise EmptyGroup("no shots")
    matches = shots["match_id"].unique()
    if len(matches) != 1:
        raise MixedMatches(f"expected one match, got {len(matches)}")
    rows = []
    # home side first, as a scoreline reads
    order = shots.assign(_home=shots["home_away"] != "home").sort_values(["_home", "team"], kind="stable")
    for team in order["team"].unique():
        rows.append({"match_id": matches[0], "team": team, **_aggregate(shots[shots["team"] == team])})
    return pd.DataFrame(rows, columns=MATCH_COLUMNS)


def match_reports(shots: pd.DataFrame) -> pd.DataFrame:
    parts = [match_report(g) for _, g in shots.groupby("match_id", sort=True)]
    return pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=MATCH_COLUMNS)


def player_season_report(shots: pd.DataFrame) -> dict:
    if shots.empty:
        raise EmptyGroup("no shots")
    keys = shots[["player", "season"]].drop_duplicates()
    if len(keys) != 1:
        raise MixedPlayers(f"expected one player-season, got {len(keys)}")
    agg = _aggregate(shots)
    return {
        "player": keys.iloc[0]["player"],
        "season": keys.iloc[0]["season"],
        "games": int(shots["match_id"].nunique()),
        **agg,
        "conversion": agg["goals"] / agg["shots"],
    }


def player_season_reports(shots: pd.DataFrame) -> pd.DataFrame:
    rows = [player_season_report(g) for _, g in shots.groupby(["player", "season"], sort=True)]
    return pd.DataFrame(rows, columns=PLAYER_COLUMNS)


def format_table(df: pd.DataFrame, digits: int = 2) -> str:
    """Aligned plain-text rendering of a report table."""
    cells = [[str(c) for c in df.columns]]
    for row in df.itertuples(index=False):
        cells.append([f"{v:.{digits}f}" if isinstance(v, float) else str(v) for v in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(df.columns))]
    lines = []
    for j, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
