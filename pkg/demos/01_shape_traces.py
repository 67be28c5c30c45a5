"""Walk through the ten architectures and the shape of every layer output.

Run with ``python3 demos/01_shape_traces.py``.
"""

# %%
# Every model maps one or two trading weeks of history to the five open
# values of the next week. Univariate models read the open column only,
# multivariate ones read all five OHLCV columns.
from weekcast.zoo import MODEL_IDS, build_model, model_summary

for model_id in MODEL_IDS:
    model = build_model(model_id)
    print(f"{model_id}: input {model.input_shape}, {model.n_params():,} parameters")

# %%
# The smallest convolutional model: a length-3 kernel over five days leaves
# three positions, and pooling collapses them to one.
for name, shape in model_summary(build_model("CNN_UNIV_5")):
    print(f"  {name:<12} {shape}")

# %%
# The multi-headed model gives each input column its own small CNN and
# concatenates the five flattened heads (5 x 96 = 480 values).
summary = model_summary(build_model("CNN_MULTH_10"))
for name, shape in summary:
    if name.startswith("head0/") or not name.startswith("head"):
        print(f"  {name:<20} {shape}")

# %%
# Encoder-decoder models squeeze the window into one vector, repeat it once
# per forecast day and decode it with a second LSTM.
for name, shape in model_summary(build_model("LSTM_UNIV_ED_10")):
    print(f"  {name:<26} {shape}")
