"""The ten week-ahead forecasting architectures.

Each model maps a window of the last one or two trading weeks to the five
daily open values of the following week. Hidden layers use relu, the output
layer is sigmoid, so targets must be scaled into [0, 1].
"""

from __future__ import annotations

import io
import json
import os
import zipfile
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .layers import (
    LSTM,
    Conv1D,
    ConvLSTM1D,
    Dense,
    Flatten,
    MaxPool1D,
    MultiHead,
    RepeatVector,
    Reshape,
    Sequential,
    TimeDistributedDense,
)
from .ndtensor import Activation, ShapeError
from .training import TrainConfig

HORIZON = 5
DUMP_FORMAT_VERSION = 1


class ModelId(str, Enum):
    CNN_UNIV_5 = "CNN_UNIV_5"
    CNN_UNIV_10 = "CNN_UNIV_10"
    CNN_MULTV_10 = "CNN_MULTV_10"
    CNN_MULTH_10 = "CNN_MULTH_10"
    LSTM_UNIV_5 = "LSTM_UNIV_5"
    LSTM_UNIV_10 = "LSTM_UNIV_10"
    LSTM_UNIV_ED_10 = "LSTM_UNIV_ED_10"
    LSTM_MULTV_ED_10 = "LSTM_MULTV_ED_10"
    LSTM_UNIV_CNN_10 = "LSTM_UNIV_CNN_10"
    LSTM_UNIV_CONV_10 = "LSTM_UNIV_CONV_10"


MODEL_IDS: Tuple[str, ...] = tuple(m.value for m in ModelId)


class UnknownModelError(KeyError):
    def __str__(self):
        return f"unknown model id {self.args[0]!r}; valid ids: {', '.join(MODEL_IDS)}"


class CorruptDumpError(ValueError):
    """Raised for unreadable or inconsistent parameter dumps."""


class ModelGraph:
    """A built architecture: the layer graph plus its data and training contract."""

    def __init__(self, model_id: ModelId, net: Sequential, input_shape: Tuple[int, int],
                 train_config: TrainConfig, seed: int, width_scale: float = 1.0):
        self.model_id = ModelId(model_id)
        self.net = net
        self.input_shape = tuple(input_shape)
        self.train_config = train_config
        self.seed = seed
        self.width_scale = width_scale

    def __repr__(self):
        return f"ModelGraph({self.model_id.value}, input={self.input_shape}, seed={self.seed})"

    @property
    def in_weeks(self) -> int:
        return self.input_shape[0] // HORIZON

    @property
    def n_features(self) -> int:
        return self.input_shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(x)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return self.net.backward(dy)

    def named_params(self):
        return self.net.named_params()

    def get_params(self) -> Dict[str, np.ndarray]:
        return {label: layer.params[key].copy() for label, layer, key in self.named_params()}

    def set_params(self, values: Dict[str, np.ndarray]) -> None:
        refs = list(self.named_params())
        labels = {label for label, _, _ in refs}
        if labels != set(values):
            raise ShapeError("parameter labels do not match this architecture")
        for label, layer, key in refs:
            v = np.asarray(values[label], dtype=np.float64)
            if v.shape != layer.params[key].shape:
                raise ShapeError(f"{label}: shape {v.shape} vs {layer.params[key].shape}")
            layer.params[key] = v.copy()

    def n_params(self) -> int:
        return sum(layer.params[key].size for _, layer, key in self.named_params())


def _univariate_cnn(w) -> Sequential:
    return Sequential([
        Conv1D(w(16), 3),
        MaxPool1D(2),
        Flatten(),
        Dense(w(100)),
        Dense(HORIZON, Activation.SIGMOID, name="output"),
    ])


def _decoder(w) -> List:
    return [
        LSTM(w(200), return_sequences=True, name="decoder_lstm"),
        TimeDistributedDense(w(100)),
        TimeDistributedDense(1, Activation.SIGMOID, name="output"),
        Reshape((HORIZON,)),
    ]


def _cnn_head(w) -> Sequential:
    return Sequential([Conv1D(w(32), 3), Conv1D(w(32), 3), MaxPool1D(2), Flatten()])


def _architecture(model_id: ModelId, w) -> Tuple[Tuple[int, int], Sequential, TrainConfig]:
    if model_id is ModelId.CNN_UNIV_5:
        return (5, 1), _univariate_cnn(w), TrainConfig(epochs=20, batch_size=4)
    if model_id is ModelId.CNN_UNIV_10:
        return (10, 1), _univariate_cnn(w), TrainConfig(epochs=70, batch_size=16)
    if model_id is ModelId.CNN_MULTV_10:
        net = Sequential([
            Conv1D(w(32), 3),
            Conv1D(w(32), 3),
            MaxPool1D(2),
            Conv1D(w(16), 3),
            MaxPool1D(2),
            Flatten(),
            Dense(w(100)),
            Dense(HORIZON, Activation.SIGMOID, name="output"),
        ])
        return (10, 5), net, TrainConfig(epochs=70, batch_size=16)
    if model_id is ModelId.CNN_MULTH_10:
        net = Sequential([
            MultiHead([_cnn_head(w) for _ in range(5)]),
            Dense(w(200)),
            Dense(w(100)),
            Dense(HORIZON, Activation.SIGMOID, name="output"),
        ])
        return (10, 5), net, TrainConfig(epochs=70, batch_size=16)
    if model_id in (ModelId.LSTM_UNIV_5, ModelId.LSTM_UNIV_10):
        steps = 5 if model_id is ModelId.LSTM_UNIV_5 else 10
        net = Sequential([
            LSTM(w(200)),
            Dense(w(100)),
            Dense(HORIZON, Activation.SIGMOID, name="output"),
        ])
        return (steps, 1), net, TrainConfig(epochs=20, batch_size=16)
    if model_id in (ModelId.LSTM_UNIV_ED_10, ModelId.LSTM_MULTV_ED_10):
        channels = 1 if model_id is ModelId.LSTM_UNIV_ED_10 else 5
        epochs = 70 if model_id is ModelId.LSTM_UNIV_ED_10 else 20
        net = Sequential([LSTM(w(200), name="encoder_lstm"), RepeatVector(HORIZON)] + _decoder(w))
        return (10, channels), net, TrainConfig(epochs=epochs, batch_size=16)
    if model_id is ModelId.LSTM_UNIV_CNN_10:
        net = Sequential([
            Conv1D(w(64), 3),
            Conv1D(w(64), 3),
            MaxPool1D(2),
            Flatten(),
            RepeatVector(HORIZON),
        ] + _decoder(w))
        return (10, 1), net, TrainConfig(epochs=20, batch_size=16)
    if model_id is ModelId.LSTM_UNIV_CONV_10:
        # two frames of five days each
        net = Sequential([
            Reshape((2, 5, 1), name="to_frames"),
            ConvLSTM1D(w(64), 3),
            Flatten(),
            RepeatVector(HORIZON),
        ] + _decoder(w))
        return (10, 1), net, TrainConfig(epochs=20, batch_size=16)
    raise UnknownModelError(model_id)


def build_model(model_id: Union[ModelId, str], seed: int = 0, width_scale: float = 1.0) -> ModelGraph:
    """Construct and initialize one of the ten architectures.

    ``width_scale`` multiplies every hidden width (filters, LSTM units, dense
    units) and leaves the topology and the five outputs untouched. It exists
    for cheap finite-difference checks.
    """
    try:
        model_id = ModelId(model_id)
    except ValueError:
        raise UnknownModelError(model_id) from None

    def w(n: int) -> int:
        return max(1, int(round(n * width_scale)))

    input_shape, net, config = _architecture(model_id, w)
    rng = np.random.default_rng(seed)
    out = net.build(input_shape, rng)
    assert out == (HORIZON,), out
    return ModelGraph(model_id, net, input_shape, config, seed, width_scale)


def model_summary(model: ModelGraph) -> List[Tuple[str, Tuple[int, ...]]]:
    """Per-sample output shape of every layer, starting with the input."""
    trace = [("input", tuple(model.input_shape))]
    shape = tuple(model.input_shape)
    for layer in model.net.layers:
        shape = layer.output_shape(shape)
        entries = layer.trace()
        assert entries[-1][1] == shape
        trace.extend(entries)
    return trace


def predict_week(model: ModelGraph, window: np.ndarray) -> np.ndarray:
    """Forecast the next five scaled open values from one input window."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != model.input_shape:
        raise ShapeError(f"{model.model_id.value} expects input {model.input_shape}, got {window.shape}")
    return model.forward(window[None])[0]


def save_params(model: ModelGraph, path: Union[str, os.PathLike], extra: Optional[dict] = None) -> None:
    """Write every parameter under its layer label, plus a JSON header, to an ``.npz`` file."""
    meta = {
        "format_version": DUMP_FORMAT_VERSION,
        "model_id": model.model_id.value,
        "seed": model.seed,
        "width_scale": model.width_scale,
        "labels": [label for label, _, _ in model.named_params()],
        "extra": extra or {},
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta)), **model.get_params())
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_dump(path: Union[str, os.PathLike]) -> Tuple[ModelGraph, dict]:
    """Rebuild a model from ``save_params`` output; returns the model and the dump header."""
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            arrays = {k: data[k] for k in data.files if k != "__meta__"}
    except FileNotFoundError:
        raise
    except (zipfile.BadZipFile, KeyError, ValueError, EOFError, OSError) as exc:
        raise CorruptDumpError(f"{path}: unreadable parameter dump ({exc})") from exc
    if meta.get("format_version") != DUMP_FORMAT_VERSION:
        raise CorruptDumpError(f"{path}: unsupported format version {meta.get('format_version')}")
    try:
        model = build_model(meta["model_id"], meta["seed"], meta["width_scale"])
    except (KeyError, UnknownModelError) as exc:
        raise CorruptDumpError(f"{path}: bad header ({exc})") from exc
    if list(meta["labels"]) != [label for label, _, _ in model.named_params()]:
        raise CorruptDumpError(f"{path}: layer labels do not match {meta['model_id']}")
    try:
        model.set_params(arrays)
    except ShapeError as exc:
        raise CorruptDumpError(f"{path}: {exc}") from exc
    return model, meta


def load_params(path: Union[str, os.PathLike]) -> ModelGraph:
    return load_dump(path)[0]
