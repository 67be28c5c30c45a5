"""Week-by-week walk-forward evaluation, RMSE metrics, rounds and ranking."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .data import (
    DAYS_PER_WEEK,
    DataError,
    OhlcvSeries,
    Scaler,
    align_weekly,
    fit_scaler,
    make_windows,
    scale,
    split_after_week,
    split_train_test,
    to_daily,
    unscale_open,
    window_input,
)
from .training import TrainConfig, train_model
from .zoo import ModelGraph, ModelId, build_model, predict_week

REFIT_POLICIES = ("none", "weekly")


@dataclass(frozen=True)
class WalkForwardOptions:
    refit_policy: str = "none"
    rounds: int = 10
    base_seed: int = 0
    horizon: int = DAYS_PER_WEEK

    def __post_init__(self):
        if self.refit_policy not in REFIT_POLICIES:
            raise ValueError(f"refit_policy must be one of {REFIT_POLICIES}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.horizon != DAYS_PER_WEEK:
            raise ValueError("the forecast horizon is fixed at 5 slots")


@dataclass(frozen=True)
class WeekPrediction:
    week: int
    start: np.datetime64
    predicted: np.ndarray  # 5 prices, Monday..Friday
    actual: np.ndarray


@dataclass
class RoundResult:
    round: int
    seed: int
    agg_rmse: float
    day_rmse: np.ndarray
    seconds: float
    predictions: List[WeekPrediction] = field(default_factory=list, repr=False)


@dataclass
class EvalReport:
    model_id: str
    rounds: List[RoundResult]
    test_open_mean: float

    @property
    def mean_agg_rmse(self) -> float:
        return float(np.mean([r.agg_rmse for r in self.rounds]))

    @property
    def mean_day_rmse(self) -> np.ndarray:
        return np.mean([r.day_rmse for r in self.rounds], axis=0)

    @property
    def mean_seconds(self) -> float:
        return float(np.mean([r.seconds for r in self.rounds]))

    @property
    def rmse_over_mean(self) -> float:
        return rmse_mean_ratio(self.mean_agg_rmse, self.test_open_mean)

    @property
    def day_rmse_over_mean(self) -> np.ndarray:
        return self.mean_day_rmse / self.test_open_mean


@dataclass(frozen=True)
class PreparedData:
    """Raw and scaled train/test splits sharing one training-fit scaler."""

    train: OhlcvSeries
    test: OhlcvSeries
    scaler: Scaler
    train_scaled: OhlcvSeries
    test_scaled: OhlcvSeries


def prepare_data(series: OhlcvSeries, split_after: Optional[int] = None,
                 boundary: Union[date, datetime, str, None] = None) -> PreparedData:
    """Align, collapse to daily bars, split, then fit the scaler on the training part only."""
    if (split_after is None) == (boundary is None):
        raise ValueError("give exactly one of split_after or boundary")
    daily = to_daily(align_weekly(series))
    if split_after is not None:
        train, test = split_after_week(daily, split_after)
    else:
        train, test = split_train_test(daily, boundary)
    scaler = fit_scaler(train)
    return PreparedData(train, test, scaler, scale(train, scaler), scale(test, scaler))


def run_walk_forward(model: ModelGraph, history: OhlcvSeries, test: OhlcvSeries,
                     opts: WalkForwardOptions, scaler: Scaler,
                     config: Optional[TrainConfig] = None) -> List[WeekPrediction]:
    """Predict each test week from the actuals that precede it.

    After every week the week's actual records join the history. With
    ``refit_policy="weekly"`` the model is then trained further on all windows
    of the extended history (``config``, seed offset by the week index).
    """
    w = DAYS_PER_WEEK
    if test.n_weeks == 0 or len(test) % w:
        raise DataError("test range must hold one or more whole weeks")
    if len(history) % w:
        raise DataError("history is not week aligned")
    if len(history) < model.in_weeks * w:
        raise DataError(f"history holds fewer than {model.in_weeks} weeks")
    if history.timestamps[-1] >= test.timestamps[0]:
        raise DataError("history must end before the test range begins")
    config = config or model.train_config
    hist = history
    out = []
    for k in range(test.n_weeks):
        window = window_input(hist.values[-model.in_weeks * w:], model.n_features)
        pred = predict_week(model, window)
        week = test.slice(k * w, (k + 1) * w)
        out.append(WeekPrediction(k, week.timestamps[0], unscale_open(pred, scaler),
                                  unscale_open(week.open, scaler)))
        hist = hist.append(week)
        if opts.refit_policy == "weekly" and k + 1 < test.n_weeks:
            windows = make_windows(hist, model.in_weeks, model.n_features)
            train_model(model, windows, replace(config, seed=config.seed + k + 1))
    return out


def _errors(preds: Sequence[WeekPrediction]) -> np.ndarray:
    if len(preds) == 0:
        raise ValueError("no predictions")
    return np.array([p.predicted - p.actual for p in preds])


def per_day_rmse(preds: Sequence[WeekPrediction]) -> np.ndarray:
    err = _errors(preds)
    return np.sqrt(np.mean(err * err, axis=0))


def aggregate_rmse(preds: Sequence[WeekPrediction]) -> float:
    err = _errors(preds)
    return float(np.sqrt(np.mean(err * err)))


def rmse_mean_ratio(agg: float, test: Union[OhlcvSeries, float]) -> float:
    """RMSE divided by the mean actual open price of the test range."""
    mean = float(np.mean(test.open)) if isinstance(test, OhlcvSeries) else float(test)
    if not mean > 0:
        raise ValueError(f"test open mean must be positive, got {mean}")
    return agg / mean


def run_round(model_id: Union[ModelId, str], data: PreparedData, opts: WalkForwardOptions,
              round_no: int, epochs: Optional[int] = None, width_scale: float = 1.0) -> RoundResult:
    seed = opts.base_seed + round_no
    start = time.perf_counter()
    model = build_model(model_id, seed, width_scale)
    config = replace(model.train_config, seed=seed)
    if epochs is not None:
        config = replace(config, epochs=epochs)
    windows = make_windows(data.train_scaled, model.in_weeks, model.n_features)
    train_model(model, windows, config)
    preds = run_walk_forward(model, data.train_scaled, data.test_scaled, opts, data.scaler, config)
    seconds = time.perf_counter() - start
    return RoundResult(round_no, seed, aggregate_rmse(preds), per_day_rmse(preds), seconds, preds)


def run_rounds(model_id: Union[ModelId, str], data: PreparedData, opts: WalkForwardOptions,
               epochs: Optional[int] = None, width_scale: float = 1.0) -> EvalReport:
    """Repeat train + walk-forward ``opts.rounds`` times with seeds base_seed + 1, + 2, ...

    ``epochs`` and ``width_scale`` override the architecture defaults; leave
    them unset to run the models as specified.
    """
    model_id = ModelId(model_id)
    results = [run_round(model_id, data, opts, r, epochs, width_scale)
               for r in range(1, opts.rounds + 1)]
    return EvalReport(model_id.value, results, float(np.mean(data.test.open)))


@dataclass(frozen=True)
class Ranking:
    by_accuracy: List[Tuple[int, str, float]]
    by_speed: List[Tuple[int, str, float]]


def rank_models(reports: Sequence[EvalReport]) -> Ranking:
    """Order models by RMSE/mean ratio and by mean round time, ties broken by id."""
    if not reports:
        raise ValueError("no reports to rank")
    ids = [r.model_id for r in reports]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate model ids in reports")

    def ranked(key):
        rows = sorted(((key(r), r.model_id) for r in reports))
        return [(n + 1, mid, value) for n, (value, mid) in enumerate(rows)]

    return Ranking(ranked(lambda r: r.rmse_over_mean), ranked(lambda r: r.mean_seconds))
