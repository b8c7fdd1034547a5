"""Config-driven pipeline: ingest -> derive -> encode -> split -> balance ->
fit -> evaluate -> score -> reports -> profiles.

Every random choice is seeded from the run configuration, and no artifact
records wall-clock time, so rerunning a config reproduces its CSV and JSON
outputs byte for byte.
"""

from __future__ import annotations

import contextlib
import csv
import fcntl
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from . import plotting
from .balancing import METHODS, BalanceConfig, balance
from .errors import ConfigError, EmptyGroup, XGError
from .features import FeatureTable, encode_features, split_train_test
from .forest import (EnsembleModel, ForestParams, GbtParams, fit_forest, fit_gbt, load_model,
                     predict_proba, save_model)
from .metrics import METRIC_NAMES, evaluate
from .profiles import (DEFAULT_GRID_POINTS, ProfileCurve, aggregate_profiles, grid_for_feature,
                       what_if_ratio, write_curves_csv, write_curves_json)
from .report import format_table, match_reports, player_season_reports, scored_frame
from .shots import ShotRecord, derive_features, parse_shot_csv, summarize_league
from .svg import emit_curve_svg
from .understat import fetch_matches

log = logging.getLogger(__name__)

STAGES = ("ingest", "derive", "encode", "split", "balance", "fit", "evaluate",
          "score", "reports", "profiles")
GROUP_FIELDS = {"team": "team", "match": "match_id", "player": "player",
                "season": "season", "league": "league"}
COUPLING_NOTE = ("distance and angle profiles vary one feature with the other held fixed, "
                 "although both derive from the same shot location")


class StageError(XGError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    csv_paths: list = field(default_factory=list)
    match_ids: list = field(default_factory=list)
    cache_dir: Optional[str] = None
    league: str = "Other"
    strict: bool = False
    split_seed: int = 0
    test_fraction: float = 0.2
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    model_kind: str = "forest"
    model_seed: int = 0
    model_params: dict = field(default_factory=dict)
    threshold: float = 0.5
    profile_features: list = field(default_factory=lambda: ["distance_to_goal", "angle_to_goal"])
    grid_points: int = DEFAULT_GRID_POINTS
    groups: list = field(default_factory=list)
    exclude_situations: list = field(default_factory=list)
    pdp_sample: int = 1000
    whatif: list = field(default_factory=list)
    compare_sampling: list = field(default_factory=list)
    output_dir: str = "xg_out"
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "RunConfig":
        base = Path(base_dir)
        data = doc.get("data", {})
        split = doc.get("split", {})
        bal = doc.get("balance", {})
        model = doc.get("model", {})
        prof = doc.get("profiles", {})
        try:
            cfg = cls(
                csv_paths=[str(base / p) for p in data.get("csv", [])],
                match_ids=[str(m) for m in data.get("match_ids", [])],
                cache_dir=str(base / data["cache_dir"]) if data.get("cache_dir") else None,
                league=data.get("league", "Other"),
                strict=bool(data.get("strict", False)),
                split_seed=int(split.get("seed", 0)),
                test_fraction=float(split.get("test_fraction", 0.2)),
                balance=BalanceConfig(**bal),
                model_kind=model.get("kind", "forest"),
                model_seed=int(model.get("seed", 0)),
                model_params=dict(model.get("params", {})),
                threshold=float(doc.get("metrics", {}).get("threshold", 0.5)),
                profile_features=list(prof.get("features", ["distance_to_goal", "angle_to_goal"])),
                grid_points=int(prof.get("m", DEFAULT_GRID_POINTS)),
                groups=list(prof.get("groups", [])),
                exclude_situations=list(prof.get("exclude_situations", [])),
                pdp_sample=int(prof.get("pdp_sample", 1000)),
                whatif=list(prof.get("whatif", [])),
                compare_sampling=list(doc.get("experiments", {}).get("compare_sampling", [])),
                output_dir=str(base / doc.get("output_dir", "xg_out")),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid configuration: {e}") from None
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        cfg = cls.from_dict(doc, path.parent)
        cfg.source = str(path)
        return cfg

    def validate(self) -> "RunConfig":
        if not self.csv_paths and not self.match_ids:
            raise ConfigError("no data sources: give data.csv paths and/or data.match_ids")
        for p in self.csv_paths:
            if not Path(p).exists():
                raise ConfigError(f"input CSV not found: {p}")
        if self.model_kind not in ("forest", "gbt"):
            raise ConfigError(f"model.kind must be 'forest' or 'gbt', got {self.model_kind!r}")
        params_cls = ForestParams if self.model_kind == "forest" else GbtParams
        try:
            params_cls(**self.model_params)
        except TypeError as e:
            raise ConfigError(f"model.params: {e}") from None
        for m in self.compare_sampling:
            if m not in METHODS:
                raise ConfigError(f"experiments.compare_sampling: unknown method {m!r}")
        for g in self.groups:
            bad = set(g) - set(GROUP_FIELDS)
            if bad:
                raise ConfigError(f"profile group keys {sorted(bad)} not in {sorted(GROUP_FIELDS)}")
        return self

    def fingerprint(self) -> dict:
        """Path-independent view of the config, used for the manifest hash."""
        d = asdict(self)
        d["csv_paths"] = [Path(p).name for p in self.csv_paths]
        for k in ("output_dir", "cache_dir", "source"):
            d.pop(k)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.fingerprint(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_group(text: str) -> dict:
    """``"team=Team A,match=m1"`` -> ``{"team": "Team A", "match": "m1"}``."""
    out = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep or key.strip() not in GROUP_FIELDS:
            raise ConfigError(f"bad group term {part!r}; use key=value with keys {sorted(GROUP_FIELDS)}")
        out[key.strip()] = value.strip()
    return out


def group_label(group: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in group.items()) if group else "ALL"


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in text)[:80]


def _json_dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def _write_rows(rows, path, fields):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _write_frame(df: pd.DataFrame, path):
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


@contextlib.contextmanager
def output_lock(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / ".lock", "w") as fh:
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise ConfigError(f"another xg process is writing to {out_dir}") from None
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


class Pipeline:
    """Lazily evaluated pipeline stages over one RunConfig.

    Each property computes its stage on first access; CLI subcommands touch
    only the stages they need.
    """

    def __init__(self, config: RunConfig):
        self.config = config.validate()
        self.out = Path(config.output_dir)
        self.counts: dict = {}
        self.stages_run: list = []
        self._cache: dict = {}
        self._model_path: Optional[Path] = None

    def _stage(self, name, fn):
        if name not in self._cache:
            try:
                self._cache[name] = fn()
            except StageError:
                raise
            except XGError as e:
                raise StageError(name, e) from e
            self.stages_run.append(name)
        return self._cache[name]

    # ------------------------------------------------------------------ data

    @property
    def records(self) -> list[ShotRecord]:
        def ingest():
            recs, own, skipped = [], 0, 0
            for p in self.config.csv_paths:
                parsed = parse_shot_csv(p, strict=self.config.strict)
                recs.extend(parsed.records)
                own += parsed.dropped_own_goals
                skipped += len(parsed.skipped)
            if self.config.match_ids:
                fetched = fetch_matches(self.config.match_ids, cache_dir=self.config.cache_dir,
                                        league=self.config.league)
                own += sum(r.result == "OwnGoal" for r in fetched)
                recs.extend(r for r in fetched if r.result != "OwnGoal")
            self.counts.update(shots=len(recs), dropped_own_goals=own, skipped_rows=skipped)
            return recs
        raw = self._stage("ingest", ingest)
        return self._stage("derive", lambda: derive_features(raw, clamp_degenerate=True))

    @property
    def table(self) -> FeatureTable:
        return self._stage("encode", lambda: encode_features(self.records))

    @property
    def partitions(self) -> tuple[FeatureTable, FeatureTable]:
        def split():
            train, test = split_train_test(self.table, self.config.test_fraction, self.config.split_seed)
            self.counts.update(train_rows=train.n, test_rows=test.n)
            return train, test
        return self._stage("split", split)

    @property
    def balanced(self) -> FeatureTable:
        def run():
            t = balance(self.partitions[0], self.config.balance)
            self.counts.update(balanced_rows=t.n, balanced_positives=int(t.labels.sum()))
            return t
        return self._stage("balance", run)

    # ----------------------------------------------------------------- model

    def fit_on(self, train: FeatureTable, method: str) -> EnsembleModel:
        c = self.config
        if c.model_kind == "forest":
            return fit_forest(train, ForestParams(**c.model_params), c.model_seed, balance_method=method)
        return fit_gbt(train, GbtParams(**c.model_params), c.model_seed, balance_method=method)

    @property
    def model(self) -> EnsembleModel:
        def fit():
            if self._model_path is not None:
                return load_model(self._model_path)
            m = self.fit_on(self.balanced, self.config.balance.method)
            self.out.mkdir(parents=True, exist_ok=True)
            save_model(m, self.out / "model.json")
            return m
        return self._stage("fit", fit)

    def use_model(self, path) -> None:
        """Score with a saved model instead of fitting one."""
        self._model_path = Path(path)

    def _test_groups(self):
        test = self.partitions[1]
        by_id = {r.shot_id: r for r in self.records}
        rows = [by_id[k] for k in test.row_keys]
        return [r.match_id for r in rows], [r.team for r in rows]

    def evaluate_model(self, model: EnsembleModel, method: str) -> dict:
        test = self.partitions[1]
        rep = evaluate(predict_proba(model, test), test.labels, self.config.threshold,
                       groups=self._test_groups())
        return {"model": model.kind, "sampling": method, **rep.to_dict()}

    @property
    def metrics(self) -> list[dict]:
        def run():
            rows = [self.evaluate_model(self.model, self.config.balance.method)]
            for method in self.config.compare_sampling:
                if method == self.config.balance.method:
                    continue
                rows.append(self.evaluate_model(self.comparison_models[method], method))
            return rows
        return self._stage("evaluate", run)

    @property
    def comparison_models(self) -> dict:
        def run():
            train = self.partitions[0]
            out = {}
            for method in self.config.compare_sampling:
                if method == self.config.balance.method:
                    out[method] = self.model
                    continue
                cfg = BalanceConfig(method, self.config.balance.target_minority_fraction,
                                    self.config.balance.seed, self.config.balance.bandwidth_scale)
                out[method] = self.fit_on(balance(train, cfg), method)
            return out
        return self._stage("compare", run)

    # ---------------------------------------------------------------- scoring

    @property
    def scored(self) -> pd.DataFrame:
        def run():
            probs = predict_proba(self.model, encode_features(self.records, self.model.column_schema))
            return scored_frame(self.records, probs)
        return self._stage("score", run)

    def group_rows(self, group: dict) -> np.ndarray:
        """Encoded rows (model schema) of the shots matching ``group``."""
        keep = [r for r in self.records
                if all(str(getattr(r, GROUP_FIELDS[k])) == str(v) for k, v in group.items())
                and r.situation not in self.config.exclude_situations]
        if not keep:
            raise EmptyGroup(f"no shots for group {group_label(group)}")
        return encode_features(keep, self.model.column_schema).X

    def profile(self, feature: str, group: dict) -> ProfileCurve:
        grid = grid_for_feature(self.table, feature, self.config.grid_points)
        return aggregate_profiles(self.model, self.group_rows(group), grid, group_label(group))

    def pdp_rows(self) -> np.ndarray:
        X = encode_features(self.records, self.model.column_schema).X
        if len(X) > self.config.pdp_sample:
            rng = np.random.default_rng(self.config.split_seed)
            X = X[np.sort(rng.choice(len(X), self.config.pdp_sample, replace=False))]
        return X

    # ---------------------------------------------------------------- writers

    def write_ingest(self):
        self.out.mkdir(parents=True, exist_ok=True)
        self.table.to_csv(self.out / "features.csv")
        summary = summarize_league(self.records)
        _write_rows(summary, self.out / "league_summary.csv", list(summary[0]) if summary else ["league"])
        self.write_distributions()

    def write_distributions(self, bins: int = 30):
        """Per-league histograms of distance and angle split by outcome."""
        rows = []
        edges = {"distance_to_goal": np.linspace(0.0, 110.0, bins + 1),
                 "angle_to_goal": np.linspace(0.0, 90.0, bins + 1)}
        leagues = sorted({r.league for r in self.records})
        for league in leagues:
            for status in (0, 1):
                sel = [r for r in self.records if r.league == league and r.status == status]
                for feat, e in edges.items():
                    counts, _ = np.histogram([getattr(r, feat) for r in sel], bins=e)
                    for lo, hi, c in zip(e[:-1], e[1:], counts):
                        rows.append({"league": league, "status": status, "feature": feat,
                                     "bin_low": float(lo), "bin_high": float(hi), "count": int(c)})
        _write_rows(rows, self.out / "distributions.csv",
                    ["league", "status", "feature", "bin_low", "bin_high", "count"])

    def write_split(self):
        train, test = self.partitions
        rows = [{"shot_id": k, "partition": "train"} for k in train.row_keys]
        rows += [{"shot_id": k, "partition": "test"} for k in test.row_keys]
        _write_rows(rows, self.out / "split.csv", ["shot_id", "partition"])

    def write_metrics(self):
        rows = self.metrics
        fields = ["model", "sampling", *METRIC_NAMES, "threshold", "n"]
        _write_rows(rows, self.out / "metrics.csv", fields)
        _json_dump(rows, self.out / "metrics.json")
        table = pd.DataFrame(rows)[fields]
        note = "mae: mean over (match, team) of |cumulative xG - goals| on the test partition\n"
        (self.out / "metrics.txt").write_text(format_table(table, 3) + note, encoding="utf-8")
        plotting.plot_metric_sweep(rows, self.out / "metrics.png")

    def write_scores(self):
        _write_frame(self.scored, self.out / "scored_shots.csv")

    def write_reports(self):
        matches = match_reports(self.scored)
        players = player_season_reports(self.scored)
        _write_frame(matches, self.out / "match_report.csv")
        _write_frame(players, self.out / "player_season_report.csv")
        (self.out / "match_report.txt").write_text(format_table(matches), encoding="utf-8")
        (self.out / "player_season_report.txt").write_text(format_table(players), encoding="utf-8")
        self._stage("reports", lambda: True)

    def write_profiles(self, features=None, groups=None) -> list[ProfileCurve]:
        features = features or self.config.profile_features
        groups = self.config.groups if groups is None else groups
        pdir = self.out / "profiles"
        pdir.mkdir(parents=True, exist_ok=True)
        curves = []
        for feat in features:
            grid = grid_for_feature(self.table, feat, self.config.grid_points)
            per_feature = [aggregate_profiles(self.model, self.pdp_rows(), grid, "ALL")]
            for g in groups:
                per_feature.append(aggregate_profiles(self.model, self.group_rows(g), grid, group_label(g)))
            for c in per_feature:
                name = f"{_slug(feat)}__{_slug(c.group_label)}"
                emit_curve_svg(c, pdir / f"{name}.svg", title=f"Aggregated profile: {feat}")
            if len(per_feature) > 1:
                emit_curve_svg(per_feature, pdir / f"{_slug(feat)}__comparison.svg",
                               title=f"Aggregated profiles: {feat}")
            plotting.plot_profiles(per_feature, pdir / f"{_slug(feat)}.png", title=feat)
            curves.extend(per_feature)
        write_curves_csv(curves, pdir / "profiles.csv")
        write_curves_json(curves, pdir / "profiles.json")
        (pdir / "README.txt").write_text(f"note: {COUPLING_NOTE}\n", encoding="utf-8")
        self._stage("profiles", lambda: True)
        return curves

    def write_whatif(self, queries=None) -> list[dict]:
        queries = self.config.whatif if queries is None else queries
        rows = []
        for q in queries:
            group = q.get("group", {})
            group = parse_group(group) if isinstance(group, str) else group
            curve = self.profile(q["feature"], group) if group else aggregate_profiles(
                self.model, self.pdp_rows(), grid_for_feature(self.table, q["feature"],
                                                              self.config.grid_points), "ALL")
            rows.append(what_if_ratio(curve, float(q["from"]), float(q["to"])))
        if rows:
            fields = ["feature", "group_label", "from_value", "to_value", "ap_from", "ap_to",
                      "ratio", "percent_change"]
            _write_rows(rows, self.out / "whatif.csv", fields)
            _json_dump({"note": COUPLING_NOTE, "queries": rows}, self.out / "whatif.json")
        return rows

    def write_sampling_comparison(self) -> list[ProfileCurve]:
        """PDP curves of models trained under each sampling strategy, on one canvas."""
        curves = []
        rows = self.pdp_rows()
        for feat in self.config.profile_features:
            grid = grid_for_feature(self.table, feat, self.config.grid_points)
            per_feature = [aggregate_profiles(m, rows, grid, f"sampling={method}")
                           for method, m in self.comparison_models.items()]
            emit_curve_svg(per_feature, self.out / f"sampling_pdp__{_slug(feat)}.svg",
                           title=f"PDP by sampling strategy: {feat}")
            plotting.plot_profiles(per_feature, self.out / f"sampling_pdp__{_slug(feat)}.png", title=feat)
            curves.extend(per_feature)
        write_curves_csv(curves, self.out / "sampling_pdp.csv")
        return curves

    def write_manifest(self):
        artifacts = {}
        for p in sorted(self.out.rglob("*")):
            if p.is_file() and p.suffix in (".csv", ".json", ".svg", ".txt") and p.name != "manifest.json":
                artifacts[str(p.relative_to(self.out))] = hashlib.sha256(p.read_bytes()).hexdigest()
        manifest = {
            "config_hash": self.config.config_hash(),
            "config": self.config.fingerprint(),
            "seeds": {"split": self.config.split_seed, "balance": self.config.balance.seed,
                      "model": self.config.model_seed},
            "stages": [s for s in STAGES if s in self.stages_run],
            "row_counts": self.counts,
            "metrics": self.metrics if "evaluate" in self.stages_run else [],
            "artifacts": artifacts,
        }
        _json_dump(manifest, self.out / "manifest.json")
        return manifest

    def run(self) -> dict:
        with output_lock(self.out):
            self.write_ingest()
            self.write_split()
            _ = self.balanced
            _ = self.model
            self.write_metrics()
            self.write_scores()
            self.write_reports()
            self.write_profiles()
            self.write_whatif()
            if self.config.compare_sampling:
                self.write_sampling_comparison()
            return self.write_manifest()


def run_pipeline(config: RunConfig) -> dict:
    return Pipeline(config).run()

