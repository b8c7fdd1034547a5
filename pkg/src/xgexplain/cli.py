"""``xg`` command-line interface.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .balancing import METHODS
from .errors import ValidationError, XGError
from .pipeline import Pipeline, RunConfig, StageError, output_lock, parse_group
from .profiles import write_curves_csv, write_curves_json
from .shots import write_shot_csv
from .svg import emit_curve_svg
from .understat import default_cache_dir, fetch_match

log = logging.getLogger("xgexplain")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.split_seed = cfg.model_seed = args.seed
        cfg.balance = dataclasses.replace(cfg.balance, seed=args.seed)
    if getattr(args, "balance", None):
        cfg.balance = dataclasses.replace(cfg.balance, method=args.balance)
    if getattr(args, "model", None):
        if args.model != cfg.model_kind:
            cfg.model_params = {}
        cfg.model_kind = args.model
    if getattr(args, "threshold", None) is not None:
        cfg.threshold = args.threshold
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    return cfg


def cmd_fetch(args):
    cache = args.cache or default_cache_dir()
    total = 0
    for mid in args.match_id:
        recs = fetch_match(mid, rate_limit=args.rate, cache_dir=cache, league=args.league)
        total += write_shot_csv(recs, args.output, append=True)
    print(f"appended {total} shots to {args.output}")


def cmd_ingest(args):
    p = Pipeline(_load_config(args))
    with output_lock(p.out):
        p.write_ingest()
    print(f"{p.counts.get('shots', 0)} shots ({p.counts.get('dropped_own_goals', 0)} own goals dropped) "
          f"-> {p.out / 'features.csv'}")


def cmd_train(args):
    p = Pipeline(_load_config(args))
    with output_lock(p.out):
        p.write_split()
        _ = p.model
    print(f"model ({p.model.kind}, {len(p.model.trees)} trees) -> {p.out / 'model.json'}")


def _pipeline_with_model(args) -> Pipeline:
    p = Pipeline(_load_config(args))
    model_path = Path(args.model_path) if getattr(args, "model_path", None) else p.out / "model.json"
    if model_path.exists():
        p.use_model(model_path)
    return p


def cmd_evaluate(args):
    p = _pipeline_with_model(args)
    with output_lock(p.out):
        p.write_metrics()
    for row in p.metrics:
        print(" ".join(f"{k}={row[k]:.4f}" if isinstance(row[k], float) else f"{k}={row[k]}"
                       for k in row if k != "degenerate"))


def cmd_score(args):
    p = _pipeline_with_model(args)
    with output_lock(p.out):
        p.write_scores()
    print(f"{len(p.scored)} shots scored -> {p.out / 'scored_shots.csv'}")


def cmd_report(args):
    p = _pipeline_with_model(args)
    with output_lock(p.out):
        p.write_scores()
        p.write_reports()
    print((p.out / "match_report.txt").read_text(encoding="utf-8"), end="")


def cmd_profile(args):
    p = _pipeline_with_model(args)
    groups = [parse_group(g) for g in args.group] if args.group else []
    features = args.feature or None
    with output_lock(p.out):
        curves = p.write_profiles(features, groups if args.group else None)
    print(f"{len(curves)} curves -> {p.out / 'profiles'}")


def cmd_whatif(args):
    p = _pipeline_with_model(args)
    query = {"feature": args.feature[0] if args.feature else "distance_to_goal",
             "group": parse_group(args.group[0]) if args.group else {},
             "from": getattr(args, "from"), "to": args.to}
    with output_lock(p.out):
        rows = p.write_whatif([query])
        curve = p.profile(query["feature"], query["group"]) if query["group"] else None
        if curve is not None:
            write_curves_csv([curve], p.out / "whatif_curve.csv")
            write_curves_json([curve], p.out / "whatif_curve.json")
            emit_curve_svg(curve, p.out / "whatif_curve.svg", title=f"What-if: {query['feature']}")
    r = rows[0]
    print(f"{r['group_label']}: {r['feature']} {r['from_value']} -> {r['to_value']}: "
          f"AP {r['ap_from']:.4f} -> {r['ap_to']:.4f} ({r['percent_change']:+.1f}%)")


def cmd_run(args):
    manifest = Pipeline(_load_config(args)).run()
    print(json.dumps({"stages": manifest["stages"], "row_counts": manifest["row_counts"]}, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xg", description="Explainable expected-goals models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fetch", help="download match pages and append their shots to a CSV")
    f.add_argument("--match-id", action="append", required=True)
    f.add_argument("--cache", help="page cache directory (default: $XG_CACHE_DIR)")
    f.add_argument("--rate", type=float, default=0.5, help="requests per second")
    f.add_argument("--league", default="Other")
    f.add_argument("--output", default="shots.csv")
    f.set_defaults(func=cmd_fetch)

    def common(p, model=True):
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--balance", choices=METHODS)
        p.add_argument("--model", choices=("forest", "gbt"))
        p.add_argument("--threshold", type=float)
        p.add_argument("--out", help="output directory (overrides output_dir)")
        if model:
            p.add_argument("--model-path", help="saved model to use instead of <out>/model.json")

    for name, func, helptext in (
        ("ingest", cmd_ingest, "parse, derive and encode shots"),
        ("train", cmd_train, "fit a model on the (balanced) training split"),
        ("evaluate", cmd_evaluate, "metric battery on the test split"),
        ("score", cmd_score, "per-shot xG for every shot"),
        ("report", cmd_report, "end-of-match and end-of-season tables"),
        ("profile", cmd_profile, "aggregated profiles for features and groups"),
        ("whatif", cmd_whatif, "reprice a group's average xG at another feature value"),
        ("run", cmd_run, "the whole pipeline"),
    ):
        p = sub.add_parser(name, help=helptext)
        common(p, model=name not in ("ingest", "train", "run"))
        if name in ("profile", "whatif"):
            p.add_argument("--feature", action="append")
            p.add_argument("--group", action="append",
                           help="e.g. team=Schalke 04,match=14620 or player=X,season=2020-21")
        if name == "whatif":
            p.add_argument("--from", type=float, required=True)
            p.add_argument("--to", type=float, required=True)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION if isinstance(e.cause, ValidationError) else EXIT_RUNTIME
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (XGError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
