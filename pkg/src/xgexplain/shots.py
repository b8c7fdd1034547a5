"""Shot-event records: CSV parsing, validation and pitch geometry.

Coordinates follow the provider convention: ``coord_l`` is the fraction of the
pitch length covered towards the attacked goal (1.0 is the goal line) and
``coord_w`` the fraction of the pitch width. Geometry is computed on a
standardized 105 m x 68 m pitch.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from .errors import BadValue, Degenerate, EmptyFile, MissingColumn, OutOfRange

log = logging.getLogger(__name__)

PITCH_LENGTH = 105.0
PITCH_WIDTH = 68.0
GOAL_CENTER_W = 32.5
GOAL_MOUTH = 7.32
HALF_MOUTH = GOAL_MOUTH / 2

LEAGUES = ("Bundesliga", "EPL", "LaLiga", "Ligue1", "SerieA", "Other")
HOME_AWAY = ("home", "away")
SITUATIONS = ("DirectFreekick", "FromCorner", "OpenPlay", "Penalty", "SetPlay")
SHOT_TYPES = ("Head", "LeftFoot", "RightFoot", "OtherBodyPart")
RESULTS = ("Goal", "MissedShots", "SavedShot", "BlockedShot", "ShotOnPost", "OwnGoal")

CSV_COLUMNS = (
    "shot_id", "match_id", "league", "season", "date", "player", "team",
    "home_away", "minute", "situation", "shot_type", "last_action",
    "coord_l", "coord_w", "result",
)


@dataclass(frozen=True)
class ShotRecord:
    shot_id: str
    match_id: str
    league: str
    season: str
    date: str
    player: str
    team: str
    home_away: str
    minute: int
    situation: str
    shot_type: str
    last_action: str
    coord_l: float
    coord_w: float
    result: str
    distance_to_goal: Optional[float] = None
    angle_to_goal: Optional[float] = None

    @property
    def status(self) -> int:
        return int(self.result == "Goal")

    @property
    def has_geometry(self) -> bool:
        return self.distance_to_goal is not None and self.angle_to_goal is not None

    def csv_row(self) -> list[str]:
        return [
            self.shot_id, self.match_id, self.league, self.season, self.date,
            self.player, self.team, self.home_away, str(self.minute),
            self.situation, self.shot_type, self.last_action,
            repr(float(self.coord_l)), repr(float(self.coord_w)), self.result,
        ]


@dataclass
class ParsedShots:
    """Records that survived ingestion plus what was dropped on the way."""

    records: list[ShotRecord]
    dropped_own_goals: int = 0
    skipped: list[BadValue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def _choice(value, allowed, row, column):
    if value not in allowed:
        raise BadValue(row, column, f"{value!r} not in {allowed}")
    return value


def _fraction(value, row, column):
    try:
        x = float(value)
    except ValueError:
        raise BadValue(row, column, f"not a number: {value!r}") from None
    if not (0.0 <= x <= 1.0):
        raise BadValue(row, column, f"{x} outside [0, 1]")
    return x


def validate_row(raw: dict, row: int) -> ShotRecord:
    """Build a ShotRecord from one CSV row, raising BadValue on the first problem."""
    for key in ("shot_id", "match_id", "player", "team", "season"):
        if not raw[key].strip():
            raise BadValue(row, key, "empty")
    try:
        dt.date.fromisoformat(raw["date"].strip()[:10])
    except ValueError:
        raise BadValue(row, "date", f"not an ISO-8601 date: {raw['date']!r}") from None
    try:
        minute = int(raw["minute"])
    except ValueError:
        raise BadValue(row, "minute", f"not an integer: {raw['minute']!r}") from None
    if minute < 1:
        raise BadValue(row, "minute", f"{minute} < 1")
    return ShotRecord(
        shot_id=raw["shot_id"].strip(),
        match_id=raw["match_id"].strip(),
        league=_choice(raw["league"], LEAGUES, row, "league"),
        season=raw["season"].strip(),
        date=raw["date"].strip(),
        player=raw["player"],
        team=raw["team"],
        home_away=_choice(raw["home_away"], HOME_AWAY, row, "home_away"),
        minute=minute,
        situation=_choice(raw["situation"], SITUATIONS, row, "situation"),
        shot_type=_choice(raw["shot_type"], SHOT_TYPES, row, "shot_type"),
        last_action=raw["last_action"].strip() or "None",
        coord_l=_fraction(raw["coord_l"], row, "coord_l"),
        coord_w=_fraction(raw["coord_w"], row, "coord_w"),
        result=_choice(raw["result"], RESULTS, row, "result"),
    )


def parse_shot_csv(path, strict: bool = False) -> ParsedShots:
    """Read a shot CSV, dropping own goals.

    In strict mode the first malformed row raises BadValue; otherwise such
    rows are skipped, logged and collected in ``ParsedShots.skipped``.
    """
    path = Path(path)
    out = ParsedShots(records=[])
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFile(f"{path}: no header")
        for name in CSV_COLUMNS:
            if name not in reader.fieldnames:
                raise MissingColumn(name)
        n_rows = 0
        for i, raw in enumerate(reader, start=1):
            n_rows += 1
            if any(raw.get(c) is None for c in CSV_COLUMNS):
                err = BadValue(i, "*", "short row")
            else:
                try:
                    rec = validate_row(raw, i)
                    err = None
                except BadValue as e:
                    err = e
            if err is not None:
                if strict:
                    raise err
                log.warning("skipping %s: %s", path.name, err)
                out.skipped.append(err)
                continue
            if rec.result == "OwnGoal":
                out.dropped_own_goals += 1
                continue
            out.records.append(rec)
    if n_rows == 0:
        raise EmptyFile(f"{path}: no data rows")
    return out


def write_shot_csv(records: Iterable[ShotRecord], path, append: bool = False) -> int:
    path = Path(path)
    write_header = not (append and path.exists() and path.stat().st_size > 0)
    n = 0
    with path.open("a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if write_header:
            w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(rec.csv_row())
            n += 1
    return n


# ---------------------------------------------------------------- geometry

def _check_fraction(coord_l, coord_w):
    if not (0.0 <= coord_l <= 1.0 and 0.0 <= coord_w <= 1.0):
        raise OutOfRange(f"coordinates ({coord_l}, {coord_w}) outside [0, 1]")


def pitch_offsets(coord_l: float, coord_w: float) -> tuple[float, float]:
    """Metres from the centre of the attacked goal: (towards own goal, lateral)."""
    _check_fraction(coord_l, coord_w)
    return PITCH_LENGTH - PITCH_LENGTH * coord_l, GOAL_CENTER_W - PITCH_WIDTH * coord_w


def goal_distance_m(x: float, y: float) -> float:
    return math.sqrt(x * x + y * y)


def goal_angle_m(x: float, y: float) -> float:
    """Angle subtended by the goal mouth, folded into (0, 90] degrees."""
    if x == 0.0 and abs(y) <= HALF_MOUTH:
        raise Degenerate(f"shot on the goal line inside the mouth (y={y})")
    denom = x * x + y * y - HALF_MOUTH ** 2
    if denom == 0.0:
        return 90.0
    return abs(math.degrees(math.atan(GOAL_MOUTH * x / denom)))


def compute_distance(coord_l: float, coord_w: float) -> float:
    return goal_distance_m(*pitch_offsets(coord_l, coord_w))


def compute_angle(coord_l: float, coord_w: float) -> float:
    return goal_angle_m(*pitch_offsets(coord_l, coord_w))


def derive_features(records: Iterable[ShotRecord], clamp_degenerate: bool = False) -> list[ShotRecord]:
    """Attach distance and angle to goal to every record, preserving order."""
    out = []
    for rec in records:
        try:
            x, y = pitch_offsets(rec.coord_l, rec.coord_w)
            dist = goal_distance_m(x, y)
            try:
                angle = goal_angle_m(x, y)
            except Degenerate:
                if not clamp_degenerate:
                    raise
                log.warning("shot %s on the goal line, angle clamped to 90", rec.shot_id)
                angle = 90.0
        except Degenerate as e:
            raise Degenerate(str(e), shot_id=rec.shot_id) from None
        except OutOfRange as e:
            raise OutOfRange(f"{e} (shot {rec.shot_id})") from None
        out.append(replace(rec, distance_to_goal=dist, angle_to_goal=angle))
    return out


# ---------------------------------------------------------------- summaries

SUMMARY_FIELDS = (
    "league", "match_count", "shot_count", "mean_shots_per_match",
    "goal_count", "mean_goals_per_match", "conversion_percent",
)


def summarize_league(records: Iterable[ShotRecord]) -> list[dict]:
    """Per-league shot and goal counts, followed by ``Mean`` and ``Total`` rows.

    ``Mean`` averages the per-league rows (as a league-level table footer
    does); ``Total`` sums the counts and leaves the ratio columns empty.
    """
    matches = defaultdict(set)
    shots = defaultdict(int)
    goals = defaultdict(int)
    for rec in records:
        matches[rec.league].add(rec.match_id)
        shots[rec.league] += 1
        goals[rec.league] += rec.status
    rows = []
    for league in sorted(shots):
        m = len(matches[league])
        rows.append({
            "league": league,
            "match_count": m,
            "shot_count": shots[league],
            "mean_shots_per_match": shots[league] / m,
            "goal_count": goals[league],
            "mean_goals_per_match": goals[league] / m,
            "conversion_percent": 100.0 * goals[league] / shots[league],
        })
    if not rows:
        return rows
    k = len(rows)
    mean = {"league": "Mean"}
    for f in SUMMARY_FIELDS[1:]:
        mean[f] = math.fsum(r[f] for r in rows) / k
    total = {"league": "Total"}
    for f in ("match_count", "shot_count", "goal_count"):
        total[f] = sum(r[f] for r in rows)
    for f in ("mean_shots_per_match", "mean_goals_per_match", "conversion_percent"):
        total[f] = None
    return rows + [mean, total]
