"""Synthetic shot corpus with a known goal-probability law.

Goals are drawn from ``sigmoid(3 - 0.25 * distance + 0.03 * angle)``. Shot
locations are sampled so that, under this law, roughly one shot in nine is
scored; the other attributes are realistic-looking but carry no signal.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .shots import (GOAL_CENTER_W, LEAGUES, PITCH_LENGTH, PITCH_WIDTH, ShotRecord,
                    compute_angle, compute_distance)

INTERCEPT = 3.0
DISTANCE_COEF = -0.25
ANGLE_COEF = 0.03

SITUATION_P = {"OpenPlay": 0.76, "FromCorner": 0.12, "SetPlay": 0.06, "DirectFreekick": 0.05, "Penalty": 0.01}
SHOT_TYPE_P = {"RightFoot": 0.5, "LeftFoot": 0.3, "Head": 0.18, "OtherBodyPart": 0.02}
LAST_ACTION_P = {
    "Pass": 0.38, "Cross": 0.14, "None": 0.12, "Rebound": 0.08, "HeadPass": 0.05,
    "TakeOn": 0.07, "BallRecovery": 0.06, "Chipped": 0.04, "Throughball": 0.03, "Aerial": 0.03,
}
TEAMS = [f"Team {c}" for c in "ABCDEFGHIJKLMNOP"]


def true_probability(distance, angle):
    return 1.0 / (1.0 + np.exp(-(INTERCEPT + DISTANCE_COEF * np.asarray(distance)
                                  + ANGLE_COEF * np.asarray(angle))))


def _pick(rng, table, size):
    levels = list(table)
    p = np.array([table[k] for k in levels])
    return np.array(levels)[rng.choice(len(levels), size=size, p=p / p.sum())]


def synthetic_shots(n: int, seed: int = 0, shots_per_match: int = 25,
                    own_goal_rate: float = 0.0) -> list[ShotRecord]:
    """``own_goal_rate`` relabels that share of shots as own goals (for ingestion tests)."""
    rng = np.random.default_rng(seed)
    situation = _pick(rng, SITUATION_P, n)
    shot_type = _pick(rng, SHOT_TYPE_P, n)
    last_action = _pick(rng, LAST_ACTION_P, n)

    x = rng.gamma(2.2, 14.0, n) + 8.0
    x = np.where(shot_type == "Head", 0.7 * x + 2.0, x)
    x = np.clip(x, 0.5, 0.95 * PITCH_LENGTH)
    y = rng.normal(0.0, 0.3 * x + 1.0)
    y = np.clip(y, GOAL_CENTER_W - PITCH_WIDTH, GOAL_CENTER_W)
    pen = situation == "Penalty"
    x[pen], y[pen] = 11.0, 0.0
    shot_type = np.where(pen & (shot_type == "Head"), "RightFoot", shot_type)
    coord_l = 1.0 - x / PITCH_LENGTH
    coord_w = (GOAL_CENTER_W - y) / PITCH_WIDTH

    dist = np.array([compute_distance(l, w) for l, w in zip(coord_l, coord_w)])
    angle = np.array([compute_angle(l, w) for l, w in zip(coord_l, coord_w)])
    goal = rng.random(n) < true_probability(dist, angle)
    result = np.where(goal, "Goal", _pick(rng, {"MissedShots": 0.4, "SavedShot": 0.3,
                                                "BlockedShot": 0.27, "ShotOnPost": 0.03}, n))
    result = np.where(rng.random(n) < own_goal_rate, "OwnGoal", result)
    minute = rng.integers(1, 96, n)
    home = rng.random(n) < 0.55

    records = []
    start = dt.date(2020, 9, 18)
    for i in range(n):
        m = i // shots_per_match
        h_team = TEAMS[(2 * m) % len(TEAMS)]
        a_team = TEAMS[(2 * m + 1 + m // len(TEAMS)) % len(TEAMS)]
        if a_team == h_team:
            a_team = TEAMS[(TEAMS.index(h_team) + 1) % len(TEAMS)]
        team = h_team if home[i] else a_team
        records.append(ShotRecord(
            shot_id=f"s{seed}-{i:06d}",
            match_id=f"m{seed}-{m:05d}",
            league=LEAGUES[m % 5],
            season="2020-21",
            date=(start + dt.timedelta(days=m // 8)).isoformat(),
            player=f"{team} #{int(rng.integers(7, 12))}",
            team=team,
            home_away="home" if home[i] else "away",
            minute=int(minute[i]),
            situation=str(situation[i]),
            shot_type=str(shot_type[i]),
            last_action=str(last_action[i]),
            coord_l=float(coord_l[i]),
            coord_w=float(coord_w[i]),
            result=str(result[i]),
        ))
    return records


def main(argv=None):
    import argparse

    from .shots import write_shot_csv

    ap = argparse.ArgumentParser(description="write a synthetic shot CSV")
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--own-goal-rate", type=float, default=0.003)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    n = write_shot_csv(synthetic_shots(args.n, args.seed, own_goal_rate=args.own_goal_rate), args.out)
    print(f"wrote {n} shots to {args.out}")


if __name__ == "__main__":
    main()
