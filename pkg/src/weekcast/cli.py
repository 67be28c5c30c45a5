"""Command line entry point: ``weekcast {synth,eval,compare,dump,load}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import data as dp
from .reporting import load_results, report_rows, rows_to_markdown, write_ranking, write_report
from .training import train_model
from .walkforward import PreparedData, WalkForwardOptions, prepare_data, rank_models, run_rounds
from .zoo import MODEL_IDS, build_model, load_dump, model_summary, predict_week, save_params

OUTPUT_DIR_ENV = "WEEKCAST_OUTPUT_DIR"

log = logging.getLogger("weekcast")


class CliError(Exception):
    pass


def _model_ids(parser: argparse.ArgumentParser, text: str) -> List[str]:
    if text.upper() == "ALL":
        return list(MODEL_IDS)
    ids = [t.strip() for t in text.split(",") if t.strip()]
    for mid in ids:
        if mid not in MODEL_IDS:
            parser.error(f"--model: unknown model id {mid!r}; valid ids: {', '.join(MODEL_IDS)} (or ALL)")
    return ids


def _add_data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="OHLCV CSV (timestamp,open,high,low,close,volume)")
    src.add_argument("--synthetic", choices=dp.REGIMES, help="use a generated series instead of a file")
    p.add_argument("--weeks", type=int, default=30, help="length of the synthetic series")
    split = p.add_mutually_exclusive_group(required=True)
    split.add_argument("--split-after-week", type=int, help="train on the first N aligned weeks")
    split.add_argument("--split-date", help="last training day (YYYY-MM-DD)")
    p.add_argument("--slots-per-day", type=int, default=1, help="records per trading day (1 = daily bars)")
    p.add_argument("--seed", type=int, default=0, help="base seed")


def _load_prepared(args) -> PreparedData:
    if args.data is not None:
        if not args.data.exists():
            raise CliError(f"--data: {args.data} does not exist")
        series = dp.parse_ohlcv_csv(args.data, slots_per_day=args.slots_per_day)
    else:
        series = dp.generate_synthetic(args.weeks, args.synthetic, args.seed)
    return prepare_data(series, split_after=args.split_after_week, boundary=args.split_date)


def cmd_synth(args) -> int:
    series = dp.generate_synthetic(args.weeks, args.regime, args.seed)
    dp.write_ohlcv_csv(series, args.out)
    print(f"wrote {len(series)} records to {args.out}")
    return 0


def _eval_one(model_id, prepared, opts, epochs, out_dir):
    report = run_rounds(model_id, prepared, opts, epochs=epochs)
    write_report(report, out_dir)
    return report


def cmd_eval(args) -> int:
    prepared = _load_prepared(args)
    opts = WalkForwardOptions(refit_policy=args.refit, rounds=args.rounds, base_seed=args.seed)
    out_dir = Path(args.out_dir)
    log.info("train %d weeks, test %d weeks", prepared.train.n_weeks, prepared.test.n_weeks)
    jobs = [(mid, prepared, opts, args.epochs, out_dir) for mid in args.model]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_eval_one, *zip(*jobs)))
    else:
        reports = [_eval_one(*job) for job in jobs]
    for report in reports:
        print(rows_to_markdown(report_rows(report), report.model_id))
    if len(reports) > 1:
        write_ranking(rank_models(reports), out_dir)
        print(f"ranking written to {out_dir / 'ranking.md'}")
    return 0


def cmd_compare(args) -> int:
    try:
        reports = load_results(args.results_dir)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None
    out_dir = Path(args.out_dir or args.results_dir)
    paths = write_ranking(rank_models(reports), out_dir)
    print(paths[1].read_text(encoding="utf-8"))
    return 0


def cmd_dump(args) -> int:
    prepared = _load_prepared(args)
    model = build_model(args.model[0], args.seed)
    config = replace(model.train_config, seed=args.seed)
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    windows = dp.make_windows(prepared.train_scaled, model.in_weeks, model.n_features)
    train_model(model, windows, config)
    scaler = {"minimum": prepared.scaler.minimum.tolist(), "maximum": prepared.scaler.maximum.tolist()}
    save_params(model, args.out, extra={"scaler": scaler})
    print(f"wrote {model.n_params()} parameters of {model.model_id.value} to {args.out}")
    return 0


def cmd_load(args) -> int:
    if not Path(args.dump).exists():
        raise CliError(f"{args.dump} does not exist")
    model, meta = load_dump(args.dump)
    print(f"{model.model_id.value} (seed {model.seed}, {model.n_params()} parameters)")
    for name, shape in model_summary(model):
        print(f"  {name:<32} {shape}")
    if args.data is None:
        return 0
    series = dp.to_daily(dp.align_weekly(dp.parse_ohlcv_csv(args.data, slots_per_day=args.slots_per_day)))
    sc = meta.get("extra", {}).get("scaler")
    if sc is None:
        raise CliError("dump carries no scaler; cannot forecast prices")
    scaler = dp.Scaler(np.array(sc["minimum"]), np.array(sc["maximum"]))
    window = dp.window_input(dp.scale(series, scaler).values[-model.input_shape[0]:], model.n_features)
    prices = dp.unscale_open(predict_week(model, window), scaler)
    days = ["Mon", "Tue", "Wed", "Thu", "Fri"]
    print("next week open forecast: " + ", ".join(f"{d} {p:.3f}" for d, p in zip(days, prices)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weekcast", description="Week-ahead CNN/LSTM open-price forecasting.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic OHLCV CSV")
    p.add_argument("--weeks", type=int, required=True)
    p.add_argument("--regime", choices=dp.REGIMES, default="sine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="train and walk-forward evaluate models over several rounds")
    p.add_argument("--model", required=True, help="model id, comma separated ids, or ALL")
    _add_data_args(p)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--refit", choices=("none", "weekly"), default="none")
    p.add_argument("--epochs", type=int, help="override every model's epoch count")
    p.add_argument("--jobs", type=int, default=1, help="models evaluated in parallel")
    p.add_argument("--out-dir", default=os.environ.get(OUTPUT_DIR_ENV, "results"))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="rank models from a results directory")
    p.add_argument("results_dir", type=Path)
    p.add_argument("--out-dir", type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dump", help="train one model and write its parameters")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("load", help="read a parameter dump; optionally forecast the week after --data")
    p.add_argument("dump", type=Path)
    p.add_argument("--data", type=Path)
    p.add_argument("--slots-per-day", type=int, default=1)
    p.set_defaults(func=cmd_load)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "model", None) is not None:
        args.model = _model_ids(parser, args.model)
        if args.command == "dump" and len(args.model) != 1:
            parser.error("--model: dump takes exactly one model id")
    if getattr(args, "rounds", 1) < 1:
        parser.error("--rounds must be >= 1")
    if args.command == "synth" and args.weeks < 3:
        parser.error("--weeks must be >= 3")
    try:
        return args.func(args)
    except (CliError, dp.DataError, ValueError, OSError) as exc:
        print(f"weekcast {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
