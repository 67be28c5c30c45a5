"""Report files: per-model result tables, machine-readable results and rankings.

Human tables follow the layout ``No., Agg RMSE, Day1..Day5, Time (sec)`` with
``Mean`` and ``RMSE/Mean`` rows, rounded to 3 decimals for RMSE, 2 for seconds
and 5 for ratios. The JSON results file keeps full float precision.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .walkforward import EvalReport, Ranking, RoundResult

TABLE_HEADER = ["No.", "Agg RMSE", "Day1", "Day2", "Day3", "Day4", "Day5", "Time (sec)"]
RESULTS_VERSION = 1


def _fmt(x: float, digits: Optional[int]) -> str:
    return repr(float(x)) if digits is None else f"{x:.{digits}f}"


def report_rows(report: EvalReport, rounded: bool = True) -> List[List[str]]:
    rmse_d, sec_d, ratio_d = (3, 2, 5) if rounded else (None, None, None)
    rows = [TABLE_HEADER]
    for r in report.rounds:
        rows.append([str(r.round), _fmt(r.agg_rmse, rmse_d)]
                    + [_fmt(v, rmse_d) for v in r.day_rmse] + [_fmt(r.seconds, sec_d)])
    rows.append(["Mean", _fmt(report.mean_agg_rmse, rmse_d)]
                + [_fmt(v, rmse_d) for v in report.mean_day_rmse] + [_fmt(report.mean_seconds, sec_d)])
    rows.append(["RMSE/Mean", _fmt(report.rmse_over_mean, ratio_d)]
                + [_fmt(v, ratio_d) for v in report.day_rmse_over_mean] + [""])
    return rows


def rows_to_csv(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def rows_to_markdown(rows: Sequence[Sequence[str]], title: Optional[str] = None) -> str:
    lines = [f"## {title}", ""] if title else []
    lines.append("| " + " | ".join(rows[0]) + " |")
    lines.append("|" + "---|" * len(rows[0]))
    lines.extend("| " + " | ".join(r) + " |" for r in rows[1:])
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    return {
        "format_version": RESULTS_VERSION,
        "model_id": report.model_id,
        "test_open_mean": report.test_open_mean,
        "rounds": [
            {
                "round": r.round,
                "seed": r.seed,
                "agg_rmse": r.agg_rmse,
                "day_rmse": [float(v) for v in r.day_rmse],
                "seconds": r.seconds,
            }
            for r in report.rounds
        ],
        "mean_agg_rmse": report.mean_agg_rmse,
        "mean_day_rmse": [float(v) for v in report.mean_day_rmse],
        "mean_seconds": report.mean_seconds,
        "rmse_over_mean": report.rmse_over_mean,
    }


def report_from_dict(d: dict) -> EvalReport:
    if d.get("format_version") != RESULTS_VERSION:
        raise ValueError(f"unsupported results format {d.get('format_version')}")
    rounds = [RoundResult(r["round"], r["seed"], r["agg_rmse"], np.array(r["day_rmse"]), r["seconds"])
              for r in d["rounds"]]
    return EvalReport(d["model_id"], rounds, d["test_open_mean"])


def predictions_csv(report: EvalReport) -> str:
    rows = [["round", "week", "week_start", "day", "predicted_open", "actual_open"]]
    for r in report.rounds:
        for p in r.predictions:
            for d in range(len(p.actual)):
                rows.append([str(r.round), str(p.week), str(p.start.astype("datetime64[D]")), str(d + 1),
                             repr(float(p.predicted[d])), repr(float(p.actual[d]))])
    return rows_to_csv(rows)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_report(report: EvalReport, out_dir: Union[str, os.PathLike]) -> List[Path]:
    """Write table (CSV + Markdown), JSON results and the predicted-vs-actual series."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.model_id
    files = {
        out / f"{stem}_table.csv": rows_to_csv(report_rows(report)),
        out / f"{stem}_table_full.csv": rows_to_csv(report_rows(report, rounded=False)),
        out / f"{stem}_table.md":rows_to_markdown(report_rows(report), f"RMSE and execution time of {stem}"),
        out / f"{stem}_predictions.csv": predictions_csv(report),
        out / f"{stem}_results.json": json.dumps(report_to_dict(report), indent=2) + "\n",
    }
    for path, text in files.items():
        _write_atomic(path, text)
    return list(files)


def load_results(results_dir: Union[str, os.PathLike]) -> List[EvalReport]:
    paths = sorted(Path(results_dir).glob("*_results.json"))
    if not paths:
        raise FileNotFoundError(f"no *_results.json files in {results_dir}")
    return [report_from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in paths]


def ranking_rows(ranking: Ranking) -> List[List[str]]:
    rows = [["Rank", "Model", "RMSE/Mean", "Rank", "Model", "Time (sec)"]]
    for (ra, ma, va), (rs, ms, vs) in zip(ranking.by_accuracy, ranking.by_speed):
        rows.append([str(ra), ma, f"{va:.5f}", str(rs), ms, f"{vs:.2f}"])
    return rows


def write_ranking(ranking: Ranking, out_dir: Union[str, os.PathLike]) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ranking_rows(ranking)
    files = {
        out / "ranking.csv": rows_to_csv(rows),
        out / "ranking.md": rows_to_markdown(rows, "Comparative analysis of the models"),
    }
    for path, text in files.items():
        _write_atomic(path, text)
    return list(files)
