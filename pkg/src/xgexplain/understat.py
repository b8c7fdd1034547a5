"""Shot data from match pages that embed their shot list as escaped JSON.

The provider ships each match page with a script block of the form::

    var shotsData = JSON.parse('\\x7B\\x22h\\x22\\x3A\\x5B ...');

holding ``{"h": [...], "a": [...]}``. Pages are cached on disk before parsing
so downstream work can run offline.
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .errors import HttpError, MalformedJson, OutOfRange, PayloadNotFound, UnknownEnum
from .shots import LEAGUES, ShotRecord

log = logging.getLogger(__name__)

BASE_URL = "https://understat.com/match/"
USER_AGENT = "xgexplain/0.1 (+shot-data research)"

_PAYLOAD = re.compile(rb"var\s+shotsData\s*=\s*JSON\.parse\(\s*'(.*?)'\s*\)", re.DOTALL)
_ESCAPE = re.compile(r"\\(x[0-9A-Fa-f]{2}|u[0-9A-Fa-f]{4}|.)", re.DOTALL)

SITUATION_MAP = {
    "OpenPlay": "OpenPlay",
    "FromCorner": "FromCorner",
    "SetPiece": "SetPlay",
    "DirectFreekick": "DirectFreekick",
    "Penalty": "Penalty",
}
SHOT_TYPE_MAP = {"RightFoot": "RightFoot", "LeftFoot": "LeftFoot", "Head": "Head",
                 "OtherBodyPart": "OtherBodyPart"}
RESULTS = ("Goal", "MissedShots", "SavedShot", "BlockedShot", "ShotOnPost", "OwnGoal")
SIDE_MAP = {"h": "home", "a": "away"}


@dataclass(frozen=True)
class RawProviderShot:
    provider_id: str
    minute: str
    result: str
    x: str
    y: str
    situation: str
    shot_type: str
    last_action: str
    h_a: str
    player: str
    h_team: str
    a_team: str
    match_id: str
    season: str
    date: str

    @classmethod
    def from_json(cls, d: dict) -> "RawProviderShot":
        try:
            return cls(
                provider_id=str(d["id"]), minute=str(d["minute"]), result=str(d["result"]),
                x=str(d["X"]), y=str(d["Y"]), situation=str(d["situation"]),
                shot_type=str(d["shotType"]), last_action=str(d.get("lastAction") or "None"),
                h_a=str(d["h_a"]), player=str(d["player"]), h_team=str(d["h_team"]),
                a_team=str(d["a_team"]), match_id=str(d["match_id"]), season=str(d["season"]),
                date=str(d["date"]),
            )
        except KeyError as e:
            raise MalformedJson(-1, f"shot lacks field {e}") from None


def _unescape(s: str) -> str:
    def sub(m):
        tok = m.group(1)
        if tok[0] in "xu" and len(tok) > 1:
            return chr(int(tok[1:], 16))
        return {"n": "\n", "t": "\t", "r": "\r"}.get(tok, tok)
    return _ESCAPE.sub(sub, s)


def parse_embedded_shots(html_page: bytes) -> list[RawProviderShot]:
    """Home shots then away shots, each in document order."""
    m = _PAYLOAD.search(html_page)
    if m is None:
        raise PayloadNotFound("no shotsData script block in page")
    text = _unescape(m.group(1).decode("utf-8"))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedJson(e.pos, e.msg) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("h"), list) or not isinstance(doc.get("a"), list):
        raise MalformedJson(0, 'payload is not an object with "h" and "a" arrays')
    return [RawProviderShot.from_json(s) for s in doc["h"] + doc["a"]]


def _season_label(season: str) -> str:
    if re.fullmatch(r"\d{4}", season):
        y = int(season)
        return f"{y}-{(y + 1) % 100:02d}"
    return season


def _lookup(table, value, field):
    try:
        return table[value]
    except KeyError:
        raise UnknownEnum(field, value) from None


def normalize(raw: RawProviderShot, league: str = "Other") -> ShotRecord:
    """Map provider fields and vocabularies onto a ShotRecord.

    Own goals pass through unchanged; excluding them is the ingestion step's job.
    A provider minute of 0 (first-minute shots) becomes 1.
    """
    if raw.result not in RESULTS:
        raise UnknownEnum("result", raw.result)
    if league not in LEAGUES:
        raise UnknownEnum("league", league)
    side = _lookup(SIDE_MAP, raw.h_a, "h_a")
    x, y = float(raw.x), float(raw.y)
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise OutOfRange(f"shot {raw.provider_id}: ({x}, {y}) outside [0, 1]")
    return ShotRecord(
        shot_id=raw.provider_id,
        match_id=raw.match_id,
        league=league,
        season=_season_label(raw.season),
        date=raw.date[:10],
        player=raw.player,
        team=raw.h_team if side == "home" else raw.a_team,
        home_away=side,
        minute=max(1, int(float(raw.minute))),
        situation=_lookup(SITUATION_MAP, raw.situation, "situation"),
        shot_type=_lookup(SHOT_TYPE_MAP, raw.shot_type, "shot_type"),
        last_action=raw.last_action,
        coord_l=x,
        coord_w=y,
        result=raw.result,
    )


class RateLimiter:
    """Spaces successive calls at least ``1 / rate`` seconds apart."""

    def __init__(self, rate: float):
        self.interval = 1.0 / rate if rate > 0 else 0.0
        self._last = None
        self._lock = threading.Lock()

    def wait(self):
        with self._lock:
            now = time.monotonic()
            if self._last is not None:
                delay = self._last + self.interval - now
                if delay > 0:
                    time.sleep(delay)
            self._last = time.monotonic()


_limiters: dict[float, RateLimiter] = {}


def _limiter(rate: float) -> RateLimiter:
    if rate not in _limiters:
        _limiters[rate] = RateLimiter(rate)
    return _limiters[rate]


def default_cache_dir() -> Path:
    return Path(os.environ.get("XG_CACHE_DIR", Path.home() / ".cache" / "xgexplain"))


def _download(url: str, timeout: float) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": USER_AGENT})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as e:
        raise HttpError(e.code, url) from None


def fetch_page(match_id: str, rate_limit: float = 0.5, cache_dir=None,
               base_url: str = BASE_URL, timeout: float = 30.0) -> bytes:
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cached = cache_dir / f"{match_id}.html"
    if cached.exists():
        return cached.read_bytes()
    _limiter(rate_limit).wait()
    url = f"{base_url}{match_id}"
    log.info("fetching %s", url)
    body = _download(url, timeout)
    cache_dir.mkdir(parents=True, exist_ok=True)
    # write-once: a concurrent writer that got there first wins
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".part")
    with os.fdopen(fd, "wb") as fh:
        fh.write(body)
    if cached.exists():
        os.unlink(tmp)
    else:
        os.replace(tmp, cached)
    return body


def fetch_match(match_id: str, rate_limit: float = 0.5, cache_dir=None,
                base_url: str = BASE_URL, league: str = "Other",
                timeout: float = 30.0) -> list[ShotRecord]:
    page = fetch_page(str(match_id), rate_limit, cache_dir, base_url, timeout)
    return [normalize(raw, league) for raw in parse_embedded_shots(page)]


def fetch_matches(match_ids, rate_limit: float = 0.5, cache_dir=None, base_url: str = BASE_URL,
                  league: str = "Other") -> list[ShotRecord]:
    out = []
    for mid in match_ids:
        out.extend(fetch_match(mid, rate_limit, cache_dir, base_url, league))
    return out

