import numpy as np
import pytest

from weekcast.data import WindowSample
from weekcast.training import TrainConfig, train_model
from weekcast.zoo import (
    MODEL_IDS,
    CorruptDumpError,
    ModelId,
    UnknownModelError,
    build_model,
    load_dump,
    load_params,
    model_summary,
    predict_week,
    save_params,
)

INPUT_SHAPES = {
    "CNN_UNIV_5": (5, 1), "CNN_UNIV_10": (10, 1), "CNN_MULTV_10": (10, 5), "CNN_MULTH_10": (10, 5),
    "LSTM_UNIV_5": (5, 1), "LSTM_UNIV_10": (10, 1), "LSTM_UNIV_ED_10": (10, 1),
    "LSTM_MULTV_ED_10": (10, 5), "LSTM_UNIV_CNN_10": (10, 1), "LSTM_UNIV_CONV_10": (10, 1),
}


def shapes(model_id):
    return [s for _, s in model_summary(build_model(model_id))]


def test_ten_models():
    assert len(MODEL_IDS) == 10
    assert set(MODEL_IDS) == set(INPUT_SHAPES)


@pytest.mark.parametrize("model_id", MODEL_IDS)
def test_input_and_output_shape(model_id):
    s = shapes(model_id)
    assert s[0] == INPUT_SHAPES[model_id]
    assert s[-1] == (5,)


def test_cnn_univ_5_trace():
    assert shapes("CNN_UNIV_5") == [(5, 1), (3, 16), (1, 16), (16,), (100,), (5,)]


def test_cnn_multv_10_trace():
    assert shapes("CNN_MULTV_10") == [(10, 5), (8, 32), (6, 32), (3, 32), (1, 16), (1, 16), (16,), (100,), (5,)]


def test_cnn_multh_10_trace():
    s = model_summary(build_model("CNN_MULTH_10"))
    heads = [name for name, _ in s if name.startswith("head")]
    assert len({h.split("/")[0] for h in heads}) == 5
    for h in range(5):
        assert [shape for name, shape in s if name.startswith(f"head{h}/")] == [(8, 32), (6, 32), (3, 32), (96,)]
    assert [shape for _, shape in s[-4:]] == [(480,), (200,), (100,), (5,)]


def test_ed_repeat_vector():
    assert (5, 200) in shapes("LSTM_UNIV_ED_10")
    assert (5, 200) in shapes("LSTM_MULTV_ED_10")


def test_lstm_univ_cnn_trace():
    s = shapes("LSTM_UNIV_CNN_10")
    assert s[1:5] == [(8, 64), (6, 64), (3, 64), (192,)]


@pytest.mark.parametrize("model_id", MODEL_IDS)
def test_predictions_in_unit_interval(model_id):
    model = build_model(model_id, seed=1, width_scale=0.2)
    rng = np.random.default_rng(0)
    out = model.forward(rng.uniform(0, 1, size=(4,) + model.input_shape))
    assert out.shape == (4, 5)
    assert np.all((out > 0) & (out < 1))


def test_predict_week_pure():
    model = build_model("CNN_UNIV_10", seed=2)
    window = np.random.default_rng(1).uniform(size=(10, 1))
    a, b = predict_week(model, window), predict_week(model, window)
    assert a.tobytes() == b.tobytes()


def test_predict_week_shape_error():
    with pytest.raises(ValueError):
        predict_week(build_model("CNN_UNIV_5"), np.zeros((10, 1)))


def test_same_seed_same_weights():
    a, b = build_model("LSTM_UNIV_5", seed=3), build_model("LSTM_UNIV_5", seed=3)
    for k, v in a.get_params().items():
        assert v.tobytes() == b.get_params()[k].tobytes()


def test_width_scale_keeps_topology():
    assert [n for n, _ in model_summary(build_model("CNN_MULTH_10", width_scale=0.1))] == \
        [n for n, _ in model_summary(build_model("CNN_MULTH_10"))]


@pytest.mark.parametrize("model_id, channels", [("CNN_MULTV_10", 5), ("CNN_UNIV_10", 1), ("LSTM_MULTV_ED_10", 5)])
def test_channel_count(model_id, channels):
    assert build_model(model_id).n_features == channels


def test_univariate_rejects_five_features():
    with pytest.raises(ValueError):
        build_model("CNN_UNIV_10").forward(np.zeros((1, 10, 5)))


@pytest.mark.parametrize("model_id", ["CNN_UNIV_5", "LSTM_UNIV_5"])
def test_overfits_single_window(model_id):
    model = build_model(model_id, seed=0)
    rng = np.random.default_rng(0)
    sample = WindowSample(rng.uniform(0, 1, model.input_shape), rng.uniform(0.2, 0.8, 5))

    def done(epoch, m):
        return np.sqrt(np.mean((predict_week(m, sample.input) - sample.target) ** 2)) < 0.02

    _, hist = train_model(model, [sample], TrainConfig(epochs=500, batch_size=1), stop_when=done)
    assert done(0, model), hist.losses[-1]


def test_unknown_model():
    with pytest.raises(UnknownModelError) as exc:
        build_model("CNN_UNIV_7")
    assert "CNN_UNIV_5" in str(exc.value)


def test_model_id_enum_accepted():
    assert build_model(ModelId.LSTM_UNIV_10).model_id is ModelId.LSTM_UNIV_10


@pytest.mark.parametrize("model_id", MODEL_IDS)
def test_dump_round_trip(tmp_path, model_id):
    model = build_model(model_id, seed=5, width_scale=0.1)
    path = tmp_path / "m.npz"
    save_params(model, path, extra={"note": 1})
    loaded, meta = load_dump(path)
    assert meta["extra"] == {"note": 1}
    x = np.random.default_rng(0).uniform(size=(2,) + model.input_shape)
    assert model.forward(x).tobytes() == loaded.forward(x).tobytes()


def test_truncated_dump(tmp_path):
    path = tmp_path / "m.npz"
    save_params(build_model("CNN_UNIV_5"), path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptDumpError):
        load_params(path)


def test_garbage_dump(tmp_path):
    path = tmp_path / "m.npz"
    path.write_bytes(b"not a dump")
    with pytest.raises(CorruptDumpError):
        load_params(path)
