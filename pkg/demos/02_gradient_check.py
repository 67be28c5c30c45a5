"""Compare backpropagated gradients with central finite differences.

Models are shrunk with ``width_scale`` so that every parameter can be
perturbed in a few seconds.
"""

import numpy as np

from weekcast.data import WindowSample
from weekcast.training import gradient_check, input_gradient_check
from weekcast.zoo import MODEL_IDS, build_model

rng = np.random.default_rng(0)

# %%
for model_id in MODEL_IDS:
    model = build_model(model_id, seed=1, width_scale=0.1)
    # random biases keep relu pre-activations away from the kink at zero
    for _, layer, key in model.named_params():
        if key in ("bias", "b"):
            layer.params[key] = layer.params[key] + rng.normal(0.0, 0.1, layer.params[key].shape)
    sample = WindowSample(rng.uniform(0, 1, model.input_shape), rng.uniform(0, 1, 5))
    err_p = gradient_check(model, sample)
    err_x = input_gradient_check(model, sample)
    print(f"{model_id:<18} {model.n_params():>6} params  "
          f"max rel. error: params {err_p:.2e}, input {err_x:.2e}")
