"""Loss, initialization, Adam and the mini-batch training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ndtensor import NonFiniteError, ShapeError


class TrainingError(RuntimeError):
    """Raised when training diverges or is given unusable data."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


@dataclass
class TrainHistory:
    losses: List[float] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.losses)


def glorot_init(shape: Sequence[int], rng: np.random.Generator,
                fan_in: Optional[int] = None, fan_out: Optional[int] = None) -> np.ndarray:
    """Uniform Glorot initialization.

    Rank-2 shapes are read as (fan_in, fan_out). Rank-3 convolution kernels
    (filters, channels, kernel) use fan_in = channels * kernel and
    fan_out = filters * kernel.
    """
    shape = tuple(int(d) for d in shape)
    if fan_in is None or fan_out is None:
        if len(shape) == 2:
            fi, fo = shape
        elif len(shape) == 3:
            fi, fo = shape[1] * shape[2], shape[0] * shape[2]
        elif len(shape) == 1:
            fi = fo = shape[0]
        else:
            raise ShapeError(f"cannot infer fans for shape {shape}")
        fan_in = fi if fan_in is None else fan_in
        fan_out = fo if fan_out is None else fan_out
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray],
              state: AdamState, config: TrainConfig) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    t = state.t + 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    new_params, m_out, v_out = {}, {}, {}
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ShapeError(f"{key}: gradient {g.shape} vs parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for {key}")
        m = b1 * state.m.get(key, 0.0) + (1.0 - b1) * g
        v = b2 * state.v.get(key, 0.0) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_params[key] = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        m_out[key], v_out[key] = m, v
    return new_params, AdamState(m_out, v_out, t)


def _param_refs(model):
    return [(label, layer, key) for label, layer, key in model.named_params()]


def stack_samples(samples) -> Tuple[np.ndarray, np.ndarray]:
    if len(samples) == 0:
        raise TrainingError("no training samples")
    X = np.stack([s.input for s in samples])
    Y = np.stack([s.target for s in samples])
    return X, Y


def train_model(model, samples, config: TrainConfig,
                stop_when: Optional[Callable[[int, object], bool]] = None):
    """Fit ``model`` in place with shuffled mini-batches and Adam.

    ``stop_when(epoch, model)`` is called after every epoch; returning True
    ends training early. Returns ``(model, TrainHistory)``.
    """
    X, Y = stack_samples(samples)
    if tuple(X.shape[1:]) != tuple(model.input_shape):
        raise ShapeError(f"samples shaped {X.shape[1:]}, model expects {model.input_shape}")
    rng = np.random.default_rng(config.seed)
    refs = _param_refs(model)
    state = AdamState()
    history = TrainHistory()
    n = len(X)
    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            pred = model.forward(X[idx])
            loss, grad = mse_loss(pred, Y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite in epoch {epoch + 1}")
            model.backward(grad)
            params = {label: layer.params[key] for label, layer, key in refs}
            grads = {label: layer.grads[key] for label, layer, key in refs}
            params, state = adam_step(params, grads, state, config)
            for label, layer, key in refs:
                layer.params[key] = params[label]
            total += loss * len(idx)
        history.losses.append(total / n)
        if stop_when is not None and stop_when(epoch, model):
            break
    history.seconds = time.perf_counter() - start
    return model, history


def gradient_check(model, sample, eps: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative error between backprop and central-difference gradients.

    Every scalar parameter is perturbed. The relative error of one entry is
    ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps entries whose true
    gradient is numerically zero from dominating.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    refs = _param_refs(model)
    if not refs:
        return 0.0
    x = np.asarray(sample.input, dtype=np.float64)[None]
    y = np.asarray(sample.target, dtype=np.float64)[None]
    for _, layer, key in refs:
        if not np.all(np.isfinite(layer.params[key])):
            raise NonFiniteError("model parameters are not finite")

    _, g = mse_loss(model.forward(x), y)
    model.backward(g)
    analytic = {label: layer.grads[key].copy() for label, layer, key in refs}

    def loss() -> float:
        return mse_loss(model.forward(x), y)[0]

    worst = 0.0
    for label, layer, key in refs:
        p = layer.params[key]
        flat = p.reshape(-1)
        a_flat = analytic[label].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss()
            flat[j] = orig - eps
            down = loss()
            flat[j] = orig
            num = (up - down) / (2.0 * eps)
            err = abs(a_flat[j] - num) / max(abs(a_flat[j]), abs(num), floor)
            worst = max(worst, err)
    return worst


def input_gradient_check(model, sample, eps: float = 1e-5, floor: float = 1e-6) -> float:
    """Like ``gradient_check`` but for the gradient w.r.t. the input window."""
    x = np.array(sample.input, dtype=np.float64)[None]
    y = np.asarray(sample.target, dtype=np.float64)[None]
    _, g = mse_loss(model.forward(x), y)
    analytic = model.backward(g).reshape(-1)
    flat = x.reshape(-1)
    worst = 0.0
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + eps
        up = mse_loss(model.forward(x), y)[0]
        flat[j] = orig - eps
        down = mse_loss(model.forward(x), y)[0]
        flat[j] = orig
        num = (up - down) / (2.0 * eps)
        worst = max(worst, abs(analytic[j] - num) / max(abs(analytic[j]), abs(num), floor))
    return worst
