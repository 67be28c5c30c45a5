"""Train one model on a synthetic series and evaluate it week by week.

The series follows a noisy sine around 7386.55. The first 40 weeks train the
model; each of the remaining 10 weeks is forecast from the week before it,
after which its actual values join the history.
"""

import numpy as np

from weekcast.data import generate_synthetic, make_windows
from weekcast.training import train_model
from weekcast.walkforward import (
    WalkForwardOptions,
    aggregate_rmse,
    per_day_rmse,
    prepare_data,
    rmse_mean_ratio,
    run_walk_forward,
)
from weekcast.zoo import build_model

# %%
series = generate_synthetic(50, "sine+noise", seed=3)
data = prepare_data(series, split_after=40)
print(f"train {data.train.n_weeks} weeks, test {data.test.n_weeks} weeks")
print(f"test open mean {np.mean(data.test.open):.2f}")

# %%
def trained_model():
    model = build_model("CNN_UNIV_5", seed=1)
    windows = make_windows(data.train_scaled, model.in_weeks, model.n_features)
    _, history = train_model(model, windows, model.train_config)
    print(f"{len(windows)} windows, {history.epochs} epochs, final loss {history.losses[-1]:.5f}, "
          f"{history.seconds:.2f} s")
    return model


# %%
# Without refitting the model stays as trained; with weekly refitting it
# keeps training on the windows that each new week completes.
for policy in ("none", "weekly"):
    preds = run_walk_forward(trained_model(), data.train_scaled, data.test_scaled,
                             WalkForwardOptions(refit_policy=policy), data.scaler)
    agg = aggregate_rmse(preds)
    days = ", ".join(f"{v:.2f}" for v in per_day_rmse(preds))
    print(f"refit={policy:<7} RMSE {agg:8.3f}  RMSE/mean {rmse_mean_ratio(agg, data.test):.5f}  days [{days}]")

# %%
# First forecast against what actually happened.
p = preds[0]
for day, (f, a) in enumerate(zip(p.predicted, p.actual), start=1):
    print(f"  day {day}: forecast {f:9.2f}  actual {a:9.2f}")
