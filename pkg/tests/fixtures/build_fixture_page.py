"""Rebuild ``match_90001.html`` from the literal payload below.

The page mimics the provider's match page: the shot list is embedded as a
JSON string whose structural characters are written as ``\\xHH`` escapes and
non-ASCII letters as ``\\uHHHH`` escapes. Run from this directory.
"""

import json

PAYLOAD = {
    "h": [
        {"id": "401101", "minute": "0", "result": "MissedShots", "X": "0.8230000305175781",
         "Y": "0.4390000152587891", "xG": "0.0412", "player": "Jérôme Böhm", "h_a": "h",
         "player_id": "7001", "situation": "OpenPlay", "season": "2020", "shotType": "RightFoot",
         "match_id": "90001", "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach",
         "h_goals": "1", "a_goals": "2", "date": "2020-10-03 18:30:00", "player_assisted": None,
         "lastAction": "None"},
        {"id": "401102", "minute": "23", "result": "Goal", "X": "0.885", "Y": "0.5",
         "xG": "0.7611", "player": "Kerem Çağlar", "h_a": "h", "player_id": "7002",
         "situation": "Penalty", "season": "2020", "shotType": "LeftFoot", "match_id": "90001",
         "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach", "h_goals": "1", "a_goals": "2",
         "date": "2020-10-03 18:30:00", "player_assisted": None, "lastAction": "Standard"},
        {"id": "401103", "minute": "37", "result": "SavedShot", "X": "0.9040000152587891",
         "Y": "0.6279999923706055", "xG": "0.0903", "player": "Jérôme Böhm", "h_a": "h",
         "player_id": "7001", "situation": "SetPiece", "season": "2020", "shotType": "Head",
         "match_id": "90001", "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach",
         "h_goals": "1", "a_goals": "2", "date": "2020-10-03 18:30:00",
         "player_assisted": "Ömer Øster", "lastAction": "Aerial"},
        {"id": "401104", "minute": "61", "result": "BlockedShot", "X": "0.7", "Y": "0.35",
         "xG": "0.0201", "player": "Ömer Øster", "h_a": "h", "player_id": "7003",
         "situation": "DirectFreekick", "season": "2020", "shotType": "RightFoot",
         "match_id": "90001", "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach",
         "h_goals": "1", "a_goals": "2", "date": "2020-10-03 18:30:00", "player_assisted": None,
         "lastAction": "Standard"},
    ],
    "a": [
        {"id": "401105", "minute": "12", "result": "Goal", "X": "0.955", "Y": "0.45",
         "xG": "0.4457", "player": "Lars D'Arcy", "h_a": "a", "player_id": "8001",
         "situation": "OpenPlay", "season": "2020", "shotType": "RightFoot", "match_id": "90001",
         "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach", "h_goals": "1", "a_goals": "2",
         "date": "2020-10-03 18:30:00", "player_assisted": "Nico \"Nix\" Brandt",
         "lastAction": "Cross"},
        {"id": "401106", "minute": "44", "result": "ShotOnPost", "X": "0.81", "Y": "0.61",
         "xG": "0.0655", "player": "Nico \"Nix\" Brandt", "h_a": "a", "player_id": "8002",
         "situation": "FromCorner", "season": "2020", "shotType": "LeftFoot",
         "match_id": "90001", "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach",
         "h_goals": "1", "a_goals": "2", "date": "2020-10-03 18:30:00", "player_assisted": None,
         "lastAction": "Rebound"},
        {"id": "401107", "minute": "78", "result": "OwnGoal", "X": "0.97", "Y": "0.52",
         "xG": "0", "player": "Kerem Çağlar", "h_a": "a", "player_id": "7002",
         "situation": "OpenPlay", "season": "2020", "shotType": "OtherBodyPart",
         "match_id": "90001", "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach",
         "h_goals": "1", "a_goals": "2", "date": "2020-10-03 18:30:00", "player_assisted": None,
         "lastAction": "None"},
        {"id": "401108", "minute": "90", "result": "MissedShots", "X": "0.6830000305175781",
         "Y": "0.2", "xG": "0.0102", "player": "Lars D'Arcy", "h_a": "a", "player_id": "8001",
         "situation": "OpenPlay", "season": "2020", "shotType": "Head", "match_id": "90001",
         "h_team": "Schalke 04", "a_team": "Borussia M.Gladbach", "h_goals": "1", "a_goals": "2",
         "date": "2020-10-03 18:30:00", "player_assisted": None, "lastAction": "TakeOn"},
    ],
}


def provider_escape(text: str) -> str:
    out = []
    for ch in text:
        if ch.isalnum() and ord(ch) < 128 or ch in " .-:":
            out.append(ch)
        elif ord(ch) < 256 and ch.isascii():
            out.append(f"\\x{ord(ch):02X}")
        else:
            out.append(f"\\u{ord(ch):04x}")
    return "".join(out)


PAGE = """<!DOCTYPE html>
<html lang="en">
<head><meta charset="utf-8"><title>Schalke 04 1 - 2 Borussia M.Gladbach</title></head>
<body>
<div class="page-wrapper"><div class="scheme-block" data-scheme="chart"></div></div>
<script>
    var match_info = JSON.parse('\\x7B\\x22id\\x22\\x3A\\x2290001\\x22\\x7D');
</script>
<script>
    var shotsData 	= JSON.parse('{payload}');
</script>
</body>
</html>
"""

if __name__ == "__main__":
    body = provider_escape(json.dumps(PAYLOAD, ensure_ascii=False, separators=(",", ":")))
    with open("match_90001.html", "w", encoding="utf-8") as fh:
        fh.write(PAGE.replace("{payload}", body))
