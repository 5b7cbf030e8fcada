"""Single entry point: train, evaluate, recommend, forecast, serve, grad-check.

Exit codes are a scripting contract: 0 success, 1 usage error, 2 data
error, 3 model error. `--json` on recommend/forecast prints exactly the
bytes the HTTP service would return for the same request. An optional
`--config <file>` (JSON, keys per subcommand) supplies flag defaults;
explicit flags always win.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
from pathlib import Path

from . import __version__, forest, lstm, report
from .data_ingest import load_agronomic_csv, load_prices_csv, impute_means, train_test_split
from .engine import recommend as engine_recommend, validate_overrides
from .errors import CropcastError, DataError, ModelError, UnknownCrop
from .geocode import GeoPoint
from .registry import load_manifest, load_price_stubs
from .service import (
    HORIZON_MAX,
    HORIZON_MIN,
    create_app,
    render_json_bytes,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3

GRAD_CHECK_THRESHOLD = 1e-4


class _Parser(argparse.ArgumentParser):
    # Usage errors are exit code 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> tuple[_Parser, argparse._SubParsersAction]:
    parser = _Parser(prog="cropcast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cropcast {__version__}")
    parser.add_argument(
        "--config", default=None, metavar="FILE",
        help="JSON file with default flag values, keyed by subcommand",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("train-forest", parents=[], help="fit the crop-suitability forest")
    p.add_argument("--data", help="agronomic CSV (N,P,K,temperature,humidity,ph,rainfall,label)")
    p.add_argument("--out", help="where to write the model JSON")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trees", type=int, default=None, help="number of trees (default 100)")
    p.add_argument("--max-depth", type=int, default=None, help="tree depth cap (default 20)")
    p.add_argument("--jobs", type=int, default=1, help="parallel tree-fitting threads")
    p.add_argument("--holdout", type=float, default=0.0, metavar="FRACTION",
                   help="hold out a stratified test fraction and report accuracy on it")

    p = sub.add_parser("train-lstm", help="fit a price forecaster for one crop")
    p.add_argument("--prices", help="prices CSV (crop,date,price)")
    p.add_argument("--crop", help="crop name to train on")
    p.add_argument("--out", help="where to write the model JSON")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--report-dir", default=None, help="write history.csv and loss.png here")

    p = sub.add_parser("evaluate", help="score a forest model on labelled rows")
    p.add_argument("--model", help="forest model JSON")
    p.add_argument("--data", help="labelled agronomic CSV")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.add_argument("--report-dir", default=None, help="write metrics.csv and f1_by_class.png here")

    p = sub.add_parser("recommend", help="full pipeline: district/point -> crop pick")
    p.add_argument("--manifest", help="registry manifest JSON")
    p.add_argument("--district", default=None)
    p.add_argument("--lat", type=float, default=None)
    p.add_argument("--lon", type=float, default=None)
    p.add_argument("--override", action="append", default=[], metavar="K=V",
                   help="feature override, e.g. --override ph=6.5,n=120 (repeatable)")
    p.add_argument("--stub-prices", default=None, metavar="CSV",
                   help="crop,price CSV pinning forecast prices (replaces models)")
    p.add_argument("--fixtures", action="store_true", help="force weather/geocoder fixture mode")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("forecast", help="price trajectory for one crop")
    p.add_argument("--manifest", help="registry manifest JSON (with --crop)")
    p.add_argument("--crop")
    p.add_argument("--model", default=None, help="forecaster JSON (bypasses the manifest)")
    p.add_argument("--recent", default=None, metavar="PRICES|CSV",
                   help="with --model: comma-separated recent prices, or a prices CSV")
    p.add_argument("--horizon", type=int, default=None, metavar="MONTHS")
    p.add_argument("--fixtures", action="store_true")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.add_argument("--report-dir", default=None, help="write trajectory.csv and forecast.png here")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--manifest", help="registry manifest JSON")
    p.add_argument("--listen", default="127.0.0.1:8080", metavar="HOST:PORT")
    p.add_argument("--fixtures", action="store_true")
    p.add_argument("--cors-origin", default=None, help="allow this origin (the web UI)")

    p = sub.add_parser("grad-check", help="verify LSTM gradients against finite differences")
    p.add_argument("--json", action="store_true", dest="as_json")

    return parser, sub


def _merge_config(
    args: argparse.Namespace, parser: _Parser, argv: list[str]
) -> argparse.Namespace:
    """Config values fill in flags the user did not pass explicitly."""
    if not args.config:
        return args
    path = Path(args.config)
    if not path.is_file():
        parser.error(f"config file not found: {args.config}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        parser.error(f"config file is not valid JSON: {exc}")
    section = doc.get(args.command, {}) if isinstance(doc, dict) else {}
    if not isinstance(section, dict):
        parser.error(f"config section {args.command!r} must be an object")
    # Config keys are flag spellings; map them to argparse destinations
    # (e.g. "json" stores to as_json).
    dests = {}
    for action in parser._actions:
        for opt in action.option_strings:
            dests[opt.lstrip("-").replace("-", "_")] = action.dest
    explicit = {
        dests.get(name, name)
        for name in (
            a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")
        )
    }
    for key, value in section.items():
        dest = dests.get(key.replace("-", "_"), key.replace("-", "_"))
        if dest in explicit or not hasattr(args, dest):
            continue
        setattr(args, dest, value)
    return args


def _require(parser: _Parser, args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) in (None, ""):
            parser.error(f"--{name.replace('_', '-')} is required")


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_train_forest(args, parser) -> int:
    _require(parser, args, "data", "out")
    records = load_agronomic_csv(args.data)
    if args.holdout > 0:
        train_rows, test_rows = train_test_split(records, args.holdout, args.seed)
    else:
        train_rows, test_rows = records, []
    train_rows, _ = impute_means(train_rows, train_rows)
    config = forest.ForestConfig(
        n_estimators=args.trees if args.trees is not None else 100,
        max_depth=args.max_depth if args.max_depth is not None else 20,
    )
    model = forest.fit_forest(train_rows, config, seed=args.seed, n_jobs=args.jobs)
    forest.save(model, args.out)
    print(
        f"trained {config.n_estimators} trees on {len(train_rows)} rows "
        f"({len(model.labels)} classes) -> {args.out}"
    )
    if test_rows:
        test_rows, _ = impute_means(test_rows, train_rows)
        metrics = forest.evaluate_classifier(model, test_rows)
        print(f"holdout accuracy: {metrics.accuracy:.4f} on {len(test_rows)} rows")
    return EXIT_OK


def _cmd_train_lstm(args, parser) -> int:
    _require(parser, args, "prices", "crop", "out")
    series_by_crop = load_prices_csv(args.prices)
    series = None
    for name, candidate in series_by_crop.items():
        if name.casefold() == args.crop.casefold():
            series = candidate
            break
    if series is None:
        raise UnknownCrop(args.crop)
    config = lstm.TrainConfig()
    if args.max_epochs is not None:
        config = lstm.TrainConfig(max_epochs=args.max_epochs)
    model, history = lstm.train(series, config, seed=args.seed)
    lstm.save(model, args.out)
    print(
        f"trained {series.crop} forecaster: {history.epochs_run} epochs "
        f"(best {history.best_epoch}, val loss {min(history.val_loss):.6f}) -> {args.out}"
    )
    if args.report_dir:
        paths = report.training_report(history, series.crop, args.report_dir)
        print("report: " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _metrics_payload(metrics: forest.ClassificationMetrics) -> dict:
    return {
        "accuracy": metrics.accuracy,
        "per_class": {
            name: {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
            for name, m in sorted(metrics.per_class.items())
        },
    }


def _cmd_evaluate(args, parser) -> int:
    _require(parser, args, "model", "data")
    model = forest.load(args.model)
    records = load_agronomic_csv(args.data)
    records, _ = impute_means(records, records)
    metrics = forest.evaluate_classifier(model, records)
    if args.as_json:
        sys.stdout.buffer.write(render_json_bytes(_metrics_payload(metrics)) + b"\n")
    else:
        print(f"accuracy: {metrics.accuracy:.4f} on {len(records)} rows")
        print(f"{'class':<16} {'precision':>9} {'recall':>9} {'f1':>9} {'support':>8}")
        for name in sorted(metrics.per_class):
            m = metrics.per_class[name]
            print(f"{name:<16} {m.precision:>9.4f} {m.recall:>9.4f} {m.f1:>9.4f} {m.support:>8}")
    if args.report_dir:
        paths = report.classification_report(metrics, args.report_dir)
        print("report: " + ", ".join(str(p) for p in paths), file=sys.stderr)
    return EXIT_OK


def _parse_overrides(parser, pairs: list[str]) -> dict[str, float]:
    overrides: dict[str, float] = {}
    for chunk in pairs:
        for pair in chunk.split(","):
            pair = pair.strip()
            if not pair:
                continue
            if "=" not in pair:
                parser.error(f"override must look like key=value, got {pair!r}")
            key, _, value = pair.partition("=")
            try:
                overrides[key.strip()] = float(value)
            except ValueError:
                parser.error(f"override {key!r} needs a numeric value, got {value!r}")
    return overrides


def _cmd_recommend(args, parser) -> int:
    _require(parser, args, "manifest")
    if (args.district is None) == (args.lat is None and args.lon is None):
        parser.error("provide exactly one of --district or --lat/--lon")
    if (args.lat is None) != (args.lon is None):
        parser.error("--lat and --lon must be given together")
    registry = load_manifest(args.manifest, fixtures=args.fixtures)
    if args.stub_prices:
        registry.apply_price_stubs(load_price_stubs(args.stub_prices))
    overrides = _parse_overrides(parser, args.override)
    try:
        validate_overrides(overrides)
    except ValueError as exc:
        parser.error(str(exc))
    query = args.district if args.district is not None else GeoPoint(args.lat, args.lon)
    rec = engine_recommend(query, registry, overrides)
    if args.as_json:
        sys.stdout.buffer.write(render_json_bytes(rec.to_dict()) + b"\n")
        return EXIT_OK
    print(f"district: {rec.district}")
    features = rec.features_used
    print(
        f"features: N={features.n:g} P={features.p:g} K={features.k:g} "
        f"temp={features.temperature:g}C hum={features.humidity:g}% "
        f"pH={features.ph:g} rain={features.rainfall:g}mm"
    )
    print(f"{'crop':<14} {'suitability':>11} {'horizon':>8} {'price':>12}")
    for c in rec.candidates:
        horizon = f"{c.horizon_months}mo" if c.horizon_months is not None else "-"
        price = f"₹{c.forecast_price:.2f}/kg" if c.forecast_price is not None else "-"
        print(f"{c.crop:<14} {c.suitability:>11.3f} {horizon:>8} {price:>12}")
    print(f"selected: {rec.selected}")
    print(rec.explanation)
    for warning in rec.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def _recent_prices(parser, text: str, model: lstm.LstmModel, crop_flag: str | None) -> list[float]:
    """--recent is either inline comma-separated prices or a prices CSV path."""
    if "," in text or not Path(text).exists():
        try:
            return [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            parser.error(f"--recent must be comma-separated prices or a CSV path, got {text!r}")
    series_by_crop = load_prices_csv(text)
    wanted = (crop_flag or model.crop).casefold()
    for name, series in series_by_crop.items():
        if name.casefold() == wanted:
            return series.tail(model.look_back)
    parser.error(f"no series for crop {crop_flag or model.crop!r} in {text}")


def _cmd_forecast(args, parser) -> int:
    _require(parser, args, "horizon")
    if not HORIZON_MIN <= args.horizon <= HORIZON_MAX:
        parser.error(f"--horizon must be in [{HORIZON_MIN}, {HORIZON_MAX}], got {args.horizon}")
    recent = None
    if args.model:
        _require(parser, args, "recent")
        model = lstm.load(args.model)
        recent = _recent_prices(parser, args.recent, model, args.crop)
        result = lstm.forecast_iterative(model, recent, args.horizon)
    else:
        _require(parser, args, "manifest", "crop")
        registry = load_manifest(args.manifest, fixtures=args.fixtures)
        forecaster = registry.forecaster_for(args.crop)
        if forecaster is None:
            raise UnknownCrop(args.crop)
        result = forecaster.forecast(args.horizon)
        series = next(
            (s for name, s in registry.prices.items() if name.casefold() == args.crop.casefold()),
            None,
        )
        recent = series.tail(12) if series is not None else None
    if args.as_json:
        sys.stdout.buffer.write(render_json_bytes(result.to_dict()) + b"\n")
    else:
        print(f"{result.crop}: {result.horizon_months}-month forecast")
        for i, price in enumerate(result.trajectory, start=1):
            print(f"  +{i:<2}mo  ₹{price:.2f}/kg")
        print(f"price at harvest: ₹{result.price_at_harvest:.2f}/kg")
    if args.report_dir:
        paths = report.forecast_report(result, args.report_dir, recent)
        print("report: " + ", ".join(str(p) for p in paths), file=sys.stderr)
    return EXIT_OK


def _cmd_serve(args, parser) -> int:
    _require(parser, args, "manifest")
    import uvicorn

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        parser.error(f"--listen must look like HOST:PORT, got {args.listen!r}")
    registry = load_manifest(args.manifest, fixtures=args.fixtures)
    app = create_app(registry, cors_origin=args.cors_origin)

    if hasattr(signal, "SIGHUP"):
        def _reload(signum, frame):
            # Atomic swap: in-flight requests keep the registry they started with.
            app.state.registry = load_manifest(args.manifest, fixtures=args.fixtures)

        signal.signal(signal.SIGHUP, _reload)

    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    return EXIT_OK


def _cmd_grad_check(args, parser) -> int:
    results = lstm.gradient_check_suite()
    worst = max(results.values())
    if args.as_json:
        payload = {
            "configs": results,
            "max_relative_error": worst,
            "threshold": GRAD_CHECK_THRESHOLD,
            "ok": worst <= GRAD_CHECK_THRESHOLD,
        }
        sys.stdout.buffer.write(render_json_bytes(payload) + b"\n")
    else:
        for name, value in results.items():
            print(f"{name}: max relative error {value:.3e}")
        verdict = "OK" if worst <= GRAD_CHECK_THRESHOLD else "FAIL"
        print(f"max {worst:.3e} (threshold {GRAD_CHECK_THRESHOLD:.0e}): {verdict}")
    return EXIT_OK if worst <= GRAD_CHECK_THRESHOLD else EXIT_MODEL


_HANDLERS = {
    "train-forest": _cmd_train_forest,
    "train-lstm": _cmd_train_lstm,
    "evaluate": _cmd_evaluate,
    "recommend": _cmd_recommend,
    "forecast": _cmd_forecast,
    "serve": _cmd_serve,
    "grad-check": _cmd_grad_check,
}


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, sub = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    subparser = sub.choices[args.command]
    args = _merge_config(args, subparser, argv)
    try:
        return _HANDLERS[args.command](args, subparser)
    except SystemExit:
        raise
    except DataError as exc:
        print(f"cropcast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"cropcast: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except CropcastError as exc:
        print(f"cropcast: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
