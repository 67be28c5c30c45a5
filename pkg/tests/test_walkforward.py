import csv
import io
import math

import numpy as np
import pytest

from weekcast.data import DataError, generate_synthetic
from weekcast.reporting import (
    TABLE_HEADER,
    load_results,
    ranking_rows,
    report_from_dict,
    report_rows,
    report_to_dict,
    rows_to_csv,
    write_ranking,
    write_report,
)
from weekcast.walkforward import (
    EvalReport,
    RoundResult,
    WalkForwardOptions,
    WeekPrediction,
    aggregate_rmse,
    per_day_rmse,
    prepare_data,
    rank_models,
    rmse_mean_ratio,
    run_rounds,
    run_walk_forward,
)
from weekcast.zoo import build_model, predict_week


@pytest.fixture(scope="module")
def prepared():
    return prepare_data(generate_synthetic(8, "sine+noise", 4), split_after=4)


def pred(p, a):
    p, a = np.asarray(p, float), np.asarray(a, float)
    return WeekPrediction(0, np.datetime64("2024-01-01"), p, a)


# ---------------------------------------------------------------- walk-forward

def test_four_week_step_through(prepared):
    model = build_model("CNN_UNIV_5", seed=1)
    out = run_walk_forward(model, prepared.train_scaled, prepared.test_scaled, WalkForwardOptions(), prepared.scaler)
    assert len(out) == 4
    full = np.concatenate([prepared.train_scaled.open, prepared.test_scaled.open])
    n_train = len(prepared.train_scaled)
    for k, wp in enumerate(out):
        # input is the week of actuals right before the predicted week
        prior = full[n_train + 5 * k - 5: n_train + 5 * k].reshape(5, 1)
        expected = predict_week(model, prior) * prepared.scaler.span[0] + prepared.scaler.minimum[0]
        assert wp.predicted.tobytes() == expected.tobytes()
        np.testing.assert_allclose(wp.actual, prepared.test.open[5 * k: 5 * k + 5], rtol=1e-14)
        assert wp.start == prepared.test.timestamps[5 * k]


def test_empty_test_range(prepared):
    model = build_model("CNN_UNIV_5")
    with pytest.raises(DataError):
        run_walk_forward(model, prepared.train_scaled, prepared.test_scaled.slice(0, 0),
                         WalkForwardOptions(), prepared.scaler)


def test_history_after_test_rejected(prepared):
    model = build_model("CNN_UNIV_5")
    with pytest.raises(DataError):
        run_walk_forward(model, prepared.test_scaled, prepared.train_scaled, WalkForwardOptions(), prepared.scaler)


def test_options_validation():
    with pytest.raises(ValueError):
        WalkForwardOptions(refit_policy="daily")
    with pytest.raises(ValueError):
        WalkForwardOptions(rounds=0)
    with pytest.raises(ValueError):
        WalkForwardOptions(horizon=3)


def test_prepare_needs_one_split():
    s = generate_synthetic(6)
    with pytest.raises(ValueError):
        prepare_data(s)
    with pytest.raises(ValueError):
        prepare_data(s, split_after=3, boundary="2013-01-18")


def test_scaler_fit_on_train_only(prepared):
    np.testing.assert_array_equal(prepared.scaler.minimum, prepared.train.values.min(axis=0))
    np.testing.assert_array_equal(prepared.scaler.maximum, prepared.train.values.max(axis=0))


# ---------------------------------------------------------------- metrics

def test_perfect_predictions():
    p = [pred([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])] * 3
    assert aggregate_rmse(p) == 0.0
    assert np.all(per_day_rmse(p) == 0)


def test_aggregate_hand_value():
    # two weeks, one point each with errors 3 and 4
    p = [pred([3], [0]), pred([4], [0])]
    assert aggregate_rmse(p) == pytest.approx(math.sqrt(12.5), abs=1e-15)


def test_day1_rmse():
    p = [pred([1, 0, 0, 0, 0], [0] * 5), pred([-1, 0, 0, 0, 0], [0] * 5)]
    assert per_day_rmse(p)[0] == 1.0


def test_single_week_per_day_is_abs_error():
    np.testing.assert_array_equal(per_day_rmse([pred([1, -2, 3, 0, 5], [0] * 5)]), [1, 2, 3, 0, 5])


def test_empty_predictions():
    with pytest.raises(ValueError):
        aggregate_rmse([])
    with pytest.raises(ValueError):
        per_day_rmse([])


def test_ratio_values():
    assert round(rmse_mean_ratio(17.137, 7386.55), 5) == 0.00232
    assert rmse_mean_ratio(0.0, 7386.55) == 0.0
    assert rmse_mean_ratio(73.8655, 7386.55) == pytest.approx(0.01, abs=1e-15)
    with pytest.raises(ValueError):
        rmse_mean_ratio(1.0, 0.0)


def test_ratio_from_series(prepared):
    assert rmse_mean_ratio(1.0, prepared.test) == 1.0 / np.mean(prepared.test.open)


# ---------------------------------------------------------------- rounds

def test_one_round_means(prepared):
    rep = run_rounds("CNN_UNIV_5", prepared, WalkForwardOptions(rounds=1, base_seed=3), epochs=2)
    r = rep.rounds[0]
    assert r.seed == 4
    assert rep.mean_agg_rmse == r.agg_rmse
    np.testing.assert_array_equal(rep.mean_day_rmse, r.day_rmse)
    assert rep.mean_seconds == r.seconds


def test_rounds_deterministic(prepared):
    opts = WalkForwardOptions(rounds=2, base_seed=5, refit_policy="weekly")
    a = run_rounds("LSTM_UNIV_5", prepared, opts, epochs=2, width_scale=0.1)
    b = run_rounds("LSTM_UNIV_5", prepared, opts, epochs=2, width_scale=0.1)
    for ra, rb in zip(a.rounds, b.rounds):
        assert ra.agg_rmse == rb.agg_rmse
        assert ra.day_rmse.tobytes() == rb.day_rmse.tobytes()


# ---------------------------------------------------------------- ranking

def stub_report(model_id, ratio, seconds, mean=7386.55):
    rr = RoundResult(1, 1, ratio * mean, np.full(5, ratio * mean), seconds)
    return EvalReport(model_id, [rr], mean)


REFERENCE_RESULTS = [("CNN_UNIV_5", 0.00232, 81.59), ("LSTM_UNIV_5", 0.00251, 323.27),
                     ("LSTM_UNIV_10", 0.00292, 523.38), ("CNN_UNIV_10", 0.00297, 86.99)]


def test_rank_reference_results():
    r = rank_models([stub_report(*row) for row in REFERENCE_RESULTS])
    assert r.by_accuracy[0][:2] == (1, "CNN_UNIV_5")
    assert r.by_speed[0][:2] == (1, "CNN_UNIV_5")
    assert [m for _, m, _ in r.by_accuracy] == ["CNN_UNIV_5", "LSTM_UNIV_5", "LSTM_UNIV_10", "CNN_UNIV_10"]
    assert [m for _, m, _ in r.by_speed] == ["CNN_UNIV_5", "CNN_UNIV_10", "LSTM_UNIV_5", "LSTM_UNIV_10"]


def test_rank_single():
    r = rank_models([stub_report("LSTM_UNIV_5", 0.01, 2.0)])
    assert r.by_accuracy == [(1, "LSTM_UNIV_5", pytest.approx(0.01))]


def test_rank_ties_by_id():
    r = rank_models([stub_report("LSTM_UNIV_5", 0.01, 2.0), stub_report("CNN_UNIV_5", 0.01, 2.0)])
    assert [m for _, m, _ in r.by_accuracy] == ["CNN_UNIV_5", "LSTM_UNIV_5"]
    assert [m for _, m, _ in r.by_speed] == ["CNN_UNIV_5", "LSTM_UNIV_5"]


def test_rank_errors():
    with pytest.raises(ValueError):
        rank_models([])
    with pytest.raises(ValueError):
        rank_models([stub_report("CNN_UNIV_5", 0.1, 1), stub_report("CNN_UNIV_5", 0.2, 1)])


# ---------------------------------------------------------------- tables

def test_table_layout():
    rep = stub_report("CNN_UNIV_5", 0.00232, 81.59)
    rows = report_rows(rep)
    assert rows[0] == TABLE_HEADER
    assert [r[0] for r in rows[1:]] == ["1", "Mean", "RMSE/Mean"]
    assert rows[-1][1] == "0.00232"
    assert rows[1][1] == "17.137"
    assert rows[1][-1] == "81.59"


def test_table_csv_round_trip():
    rows = report_rows(stub_report("CNN_UNIV_5", 0.003, 1.5))
    assert list(csv.reader(io.StringIO(rows_to_csv(rows)))) == rows


def test_results_json_round_trip(tmp_path, prepared):
    rep = run_rounds("CNN_UNIV_5", prepared, WalkForwardOptions(rounds=2), epochs=1)
    files = write_report(rep, tmp_path)
    assert all(p.exists() for p in files)
    back = report_from_dict(report_to_dict(rep))
    assert back.mean_agg_rmse == rep.mean_agg_rmse
    (loaded,) = load_results(tmp_path)
    assert loaded.rounds[1].day_rmse.tolist() == rep.rounds[1].day_rmse.tolist()


def test_ranking_files(tmp_path):
    r = rank_models([stub_report(*row) for row in REFERENCE_RESULTS])
    assert ranking_rows(r)[1] == ["1", "CNN_UNIV_5", "0.00232", "1", "CNN_UNIV_5", "81.59"]
    csv_path, md_path = write_ranking(r, tmp_path)
    assert "CNN_UNIV_5" in md_path.read_text()


def test_load_results_empty(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_results(tmp_path)
