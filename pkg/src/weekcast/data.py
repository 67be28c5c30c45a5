"""OHLCV ingestion, Monday-Friday alignment, scaling and supervised windows."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from typing import IO, Dict, List, Tuple, Union

import numpy as np

COLUMNS = ("open", "high", "low", "close", "volume")
HEADER = ("timestamp",) + COLUMNS
OPEN = 0
DAYS_PER_WEEK = 5
BASE_OPEN_PRICE = 7386.55
REGIMES = ("sine", "trend", "sine+noise")


class DataError(ValueError):
    """Raised for malformed, unordered or insufficient market data."""


def _weekday(days: np.ndarray) -> np.ndarray:
    # 1970-01-01 was a Thursday; Monday -> 0
    return (days.astype(np.int64) + 3) % 7


@dataclass(frozen=True)
class OhlcvSeries:
    """Time-ordered OHLCV records.

    ``values`` has one row per slot and the columns of ``COLUMNS``.
    ``slots_per_day`` is 1 for daily bars and larger for intraday bars.
    """

    timestamps: np.ndarray  # datetime64[s]
    values: np.ndarray
    slots_per_day: int = 1

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[1] != len(COLUMNS) or len(ts) != len(vals):
            raise DataError(f"values must be ({len(ts)}, {len(COLUMNS)}), got {vals.shape}")
        if self.slots_per_day < 1:
            raise DataError("slots_per_day must be >= 1")
        if len(ts) > 1:
            bad = np.nonzero(np.diff(ts) <= np.timedelta64(0, "s"))[0]
            if bad.size:
                raise DataError(f"timestamps not strictly increasing at record {bad[0] + 2}")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def open(self) -> np.ndarray:
        return self.values[:, OPEN]

    @property
    def days(self) -> np.ndarray:
        return self.timestamps.astype("datetime64[D]")

    @property
    def slots_per_week(self) -> int:
        return DAYS_PER_WEEK * self.slots_per_day

    @property
    def n_weeks(self) -> int:
        return len(self) // self.slots_per_week

    def stats(self) -> Dict[str, Dict[str, float]]:
        return {
            name: {
                "min": float(self.values[:, j].min()),
                "max": float(self.values[:, j].max()),
                "mean": float(self.values[:, j].mean()),
            }
            for j, name in enumerate(COLUMNS)
        }

    def slice(self, start: int, stop: int) -> "OhlcvSeries":
        return replace(self, timestamps=self.timestamps[start:stop], values=self.values[start:stop])

    def append(self, other: "OhlcvSeries") -> "OhlcvSeries":
        return replace(
            self,
            timestamps=np.concatenate([self.timestamps, other.timestamps]),
            values=np.concatenate([self.values, other.values]),
        )


def invalid_records(values: np.ndarray) -> np.ndarray:
    """Indices of rows that break the OHLC ordering, volume sign or finiteness rules."""
    v = np.asarray(values, dtype=np.float64)
    o, h, lo, c, vol = v.T
    ok = (
        np.all(np.isfinite(v), axis=1)
        & (lo <= o) & (o <= h)
        & (lo <= c) & (c <= h)
        & (lo <= h)
        & (vol >= 0)
    )
    return np.nonzero(~ok)[0]


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    # keep exchange wall-clock time; weekdays are judged locally
    return ts.replace(tzinfo=None)


def parse_ohlcv_csv(source: Union[bytes, str, os.PathLike, IO[bytes]],
                    slots_per_day: int = 1) -> OhlcvSeries:
    """Read ``timestamp,open,high,low,close,volume`` CSV.

    ``source`` may be raw bytes, a path or a binary stream. Errors name the
    offending line (the header is line 1).
    """
    if isinstance(source, bytes):
        raw = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    text = raw.decode("utf-8-sig")
    rows = list(csv.reader(io.StringIO(text, newline="")))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("empty file")
    header = tuple(h.strip().lower() for h in rows[0])
    if header != HEADER:
        raise DataError(f"line 1: expected header {','.join(HEADER)}, got {','.join(rows[0])}")
    if len(rows) == 1:
        raise DataError("file has a header but no records")

    stamps: List[datetime] = []
    values = np.empty((len(rows) - 1, len(COLUMNS)))
    for n, row in enumerate(rows[1:]):
        line = n + 2
        if len(row) != len(HEADER):
            raise DataError(f"line {line}: expected {len(HEADER)} fields, got {len(row)}")
        try:
            stamps.append(_parse_timestamp(row[0]))
        except ValueError:
            raise DataError(f"line {line}: bad timestamp {row[0]!r}") from None
        try:
            values[n] = [float(x) for x in row[1:]]
        except ValueError:
            raise DataError(f"line {line}: non-numeric price or volume") from None
        if n and stamps[n] <= stamps[n - 1]:
            raise DataError(f"line {line}: timestamp {row[0]} is not after the previous record")
    bad = invalid_records(values)
    if bad.size:
        raise DataError(f"line {bad[0] + 2}: record violates low <= open/close <= high or volume >= 0")
    return OhlcvSeries(np.array(stamps, dtype="datetime64[s]"), values, slots_per_day)


def _format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_ohlcv_csv(series: OhlcvSeries, dest: Union[str, os.PathLike, IO[str]]) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for ts, row in zip(series.timestamps, series.values):
            w.writerow([str(ts) + "Z"] + [_format_number(v) for v in row])

    if isinstance(dest, (str, os.PathLike)):
        tmp = f"{dest}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
        os.replace(tmp, dest)
    else:
        emit(dest)


def align_weekly(series: OhlcvSeries) -> OhlcvSeries:
    """Keep only complete Monday-Friday weeks.

    Weekend records are dropped. A week missing any weekday, or with the wrong
    number of slots on some day, is dropped whole.
    """
    if len(series) == 0:
        raise DataError("empty series")
    days = series.days
    wd = _weekday(days)
    weekday = wd < 5
    days, wd = days[weekday], wd[weekday]
    idx = np.nonzero(weekday)[0]
    mondays = days - wd.astype("timedelta64[D]")
    keep = np.zeros(len(series), dtype=bool)
    spd = series.slots_per_day
    for monday in np.unique(mondays):
        in_week = mondays == monday
        counts = np.bincount(wd[in_week], minlength=5)
        if np.all(counts == spd):
            keep[idx[in_week]] = True
    if not keep.any():
        raise DataError("no complete Monday-Friday week in series")
    return replace(series, timestamps=series.timestamps[keep], values=series.values[keep])


def _week_keys(series: OhlcvSeries) -> np.ndarray:
    days = series.days
    return days - _weekday(days).astype("timedelta64[D]")


def split_train_test(series: OhlcvSeries, boundary: Union[date, datetime, str, np.datetime64]
                     ) -> Tuple[OhlcvSeries, OhlcvSeries]:
    """Records on or before ``boundary`` (a calendar day) train; the rest test."""
    cut = np.datetime64(boundary, "D")
    if len(series) == 0:
        raise DataError("empty series")
    on_or_before = series.days <= cut
    n_train = int(on_or_before.sum())
    if n_train == 0:
        raise DataError(f"boundary {cut} precedes the series start {series.days[0]}")
    if n_train == len(series):
        raise DataError(f"boundary {cut} leaves no test records")
    if not np.all(on_or_before[:n_train]):
        raise DataError("series is not time ordered")
    weeks = _week_keys(series)
    if weeks[n_train - 1] == weeks[n_train]:
        raise DataError(f"boundary {cut} falls inside the week of {weeks[n_train]}")
    return series.slice(0, n_train), series.slice(n_train, len(series))


def split_after_week(series: OhlcvSeries, n_weeks: int) -> Tuple[OhlcvSeries, OhlcvSeries]:
    """Split a week-aligned series after its first ``n_weeks`` weeks."""
    if not 0 < n_weeks < series.n_weeks:
        raise DataError(f"split after week {n_weeks} needs 1..{series.n_weeks - 1}")
    cut = n_weeks * series.slots_per_week
    return series.slice(0, cut), series.slice(cut, len(series))


def to_daily(series: OhlcvSeries) -> OhlcvSeries:
    """Collapse intraday slots to one bar per day (first open, max high, min low, last close, summed volume)."""
    if series.slots_per_day == 1:
        return series
    days = series.days
    starts = np.nonzero(np.r_[True, days[1:] != days[:-1]])[0]
    ends = np.r_[starts[1:], len(series)]
    v = series.values
    bars = np.array([
        [v[s, 0], v[s:e, 1].max(), v[s:e, 2].min(), v[e - 1, 3], v[s:e, 4].sum()]
        for s, e in zip(starts, ends)
    ])
    return OhlcvSeries(days[starts].astype("datetime64[s]"), bars, 1)


@dataclass(frozen=True)
class Scaler:
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum


def fit_scaler(train: OhlcvSeries) -> Scaler:
    lo = train.values.min(axis=0)
    hi = train.values.max(axis=0)
    flat = np.nonzero(hi <= lo)[0]
    if flat.size:
        raise DataError(f"feature {COLUMNS[flat[0]]!r} is constant in the training data")
    return Scaler(lo, hi)


def scale(series: OhlcvSeries, scaler: Scaler) -> OhlcvSeries:
    """Min-max map every feature with the training extremes. Values are not clipped."""
    return replace(series, values=(series.values - scaler.minimum) / scaler.span)


def unscale_open(values: np.ndarray, scaler: Scaler) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * scaler.span[OPEN] + scaler.minimum[OPEN]


@dataclass(frozen=True)
class WindowSample:
    input: np.ndarray  # (5 * in_weeks, features)
    target: np.ndarray  # (5,) open values
    anchor: np.datetime64 = field(default=None)


def window_input(values: np.ndarray, features: int) -> np.ndarray:
    if features == 1:
        return values[:, OPEN:OPEN + 1].copy()
    if features == len(COLUMNS):
        return values.copy()
    raise DataError(f"features must be 1 or {len(COLUMNS)}, got {features}")


def make_windows(series: OhlcvSeries, in_weeks: int, features: int) -> List[WindowSample]:
    """Weekly-stride supervised samples: ``in_weeks`` weeks in, the next week's opens out."""
    if series.slots_per_day != 1:
        raise DataError("make_windows needs daily slots; collapse intraday data with to_daily")
    if in_weeks not in (1, 2):
        raise DataError(f"in_weeks must be 1 or 2, got {in_weeks}")
    if len(series) % DAYS_PER_WEEK:
        raise DataError("series is not week aligned")
    n_weeks = series.n_weeks
    if n_weeks <= in_weeks:
        raise DataError(f"{n_weeks} weeks are too few for {in_weeks}-week windows")
    w = DAYS_PER_WEEK
    out = []
    for k in range(n_weeks - in_weeks):
        lo, mid = k * w, (k + in_weeks) * w
        out.append(WindowSample(
            input=window_input(series.values[lo:mid], features),
            target=series.values[mid:mid + w, OPEN].copy(),
            anchor=series.timestamps[mid],
        ))
    return out


def generate_synthetic(weeks: int, regime: str = "sine", seed: int = 0,
                       start: Union[date, str] = date(2012, 12, 31),
                       base: float = BASE_OPEN_PRICE) -> OhlcvSeries:
    """Daily Monday-Friday OHLCV series with a known open-price pattern.

    ``sine``: open = base * (1 + 0.1 sin(2 pi t / 25)).
    ``trend``: open rises linearly by 0.1% of base per slot.
    ``sine+noise``: sine plus Gaussian noise with sd 1% of base.
    High, low and close stay within 1% of open; volume is positive.
    """
    if weeks < 3:
        raise DataError("synthetic series need at least 3 weeks")
    if regime not in REGIMES:
        raise DataError(f"regime must be one of {REGIMES}, got {regime!r}")
    start = np.datetime64(start, "D")
    if _weekday(np.array([start]))[0] != 0:
        raise DataError(f"start {start} is not a Monday")
    rng = np.random.default_rng(seed)
    n = weeks * DAYS_PER_WEEK
    t = np.arange(n)
    if regime == "trend":
        opens = base * (1.0 + 0.001 * t)
    else:
        opens = base * (1.0 + 0.1 * np.sin(2.0 * np.pi * t / 25.0))
        if regime == "sine+noise":
            opens = opens + rng.normal(0.0, 0.01 * base, n)
    close = opens * (1.0 + rng.uniform(-0.005, 0.005, n))
    high = np.maximum(opens, close) * (1.0 + rng.uniform(0.0, 0.005, n))
    low = np.minimum(opens, close) * (1.0 - rng.uniform(0.0, 0.005, n))
    volume = rng.integers(100_000, 1_000_000, n).astype(np.float64)
    offsets = (t // DAYS_PER_WEEK) * 7 + t % DAYS_PER_WEEK
    stamps = (start + offsets.astype("timedelta64[D]")).astype("datetime64[s]")
    return OhlcvSeries(stamps, np.column_stack([opens, high, low, close, volume]), 1)
