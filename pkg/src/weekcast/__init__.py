"""Week-ahead stock open-price forecasting with from-scratch CNN and LSTM models."""

from .data import (
    OhlcvSeries,
    Scaler,
    WindowSample,
    align_weekly,
    fit_scaler,
    generate_synthetic,
    make_windows,
    parse_ohlcv_csv,
    scale,
    split_train_test,
    unscale_open,
)
from .training import TrainConfig, gradient_check, train_model
from .walkforward import (
    EvalReport,
    WalkForwardOptions,
    aggregate_rmse,
    per_day_rmse,
    prepare_data,
    rank_models,
    rmse_mean_ratio,
    run_rounds,
    run_walk_forward,
)
from .zoo import MODEL_IDS, ModelId, build_model, model_summary, predict_week

__version__ = "0.1.0"
