"""Layers with explicit forward and backward passes.

Every layer works on a leading batch axis. Shapes quoted in docstrings are per
sample unless stated otherwise. Layer objects keep the cache of their most
recent forward call; ``backward`` consumes it and fills ``layer.grads``.

The module-level functions (``conv1d_forward``, ``lstm_step`` ...) are the pure
building blocks the layer classes are made of. They accept either a single
sample or a batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ndtensor import (
    Activation,
    ShapeError,
    Tensor,
    activate,
    activation_backward,
    sigmoid,
)
from .training import glorot_init

Shape = Tuple[int, ...]


class LayerConfigError(ValueError):
    """Raised for layer hyperparameters that cannot describe a valid layer."""


class StateError(RuntimeError):
    """Raised when ``backward`` is called without a matching ``forward``."""


def conv_output_length(input_len: int, kernel: int) -> int:
    """Length of a valid (unpadded, stride 1) convolution output."""
    if kernel < 1 or input_len < 1:
        raise LayerConfigError(f"kernel and input length must be positive, got {kernel}, {input_len}")
    if kernel > input_len:
        raise LayerConfigError(f"kernel {kernel} is longer than input {input_len}")
    return input_len - kernel + 1


# --------------------------------------------------------------------------
# pure building blocks
# --------------------------------------------------------------------------

def _as_batch(x: Tensor, rank: int) -> Tuple[Tensor, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == rank:
        return x[None], True
    if x.ndim == rank + 1:
        return x, False
    raise ShapeError(f"expected rank {rank} (or batched {rank + 1}), got shape {x.shape}")


def _same_padding(kernel: int) -> Tuple[int, int]:
    left = (kernel - 1) // 2
    return left, kernel - 1 - left


def _conv(x: Tensor, kernel: Tensor, pad: Tuple[int, int] = (0, 0)) -> Tuple[Tensor, Tensor]:
    """Batched cross-correlation. x (B, L, C), kernel (F, C, K) -> (B, L', F), im2col cache."""
    n_filters, channels, k = kernel.shape
    if x.shape[-1] != channels:
        raise ShapeError(f"input has {x.shape[-1]} channels, kernel expects {channels}")
    if pad != (0, 0):
        x = np.pad(x, ((0, 0), pad, (0, 0)))
    conv_output_length(x.shape[1], k)
    cols = sliding_window_view(x, k, axis=1)  # (B, L', C, K)
    b, lout = cols.shape[:2]
    cols = cols.reshape(b * lout, channels * k)
    out = cols @ kernel.reshape(n_filters, channels * k).T
    return out.reshape(b, lout, n_filters), cols


def _conv_backward(dout: Tensor, cols: Tensor, kernel: Tensor, in_len: int,
                   pad: Tuple[int, int] = (0, 0)) -> Tuple[Tensor, Tensor]:
    n_filters, channels, k = kernel.shape
    b, lout, _ = dout.shape
    d2 = dout.reshape(b * lout, n_filters)
    dkernel = (d2.T @ cols).reshape(kernel.shape)
    dcols = (d2 @ kernel.reshape(n_filters, channels * k)).reshape(b, lout, channels, k)
    dxp = np.zeros((b, in_len + pad[0] + pad[1], channels))
    for j in range(k):
        dxp[:, j:j + lout, :] += dcols[..., j]
    return dxp[:, pad[0]:pad[0] + in_len, :], dkernel


def conv1d_forward(x: Tensor, kernel: Tensor, bias: Tensor,
                   activation: Activation = Activation.IDENTITY) -> Tensor:
    """Valid 1-D convolution without kernel flip.

    ``out[i, f] = act(bias[f] + sum_c sum_j x[i + j, c] * kernel[f, c, j])``
    """
    xb, single = _as_batch(x, 2)
    z, _ = _conv(xb, np.asarray(kernel, dtype=np.float64))
    out = activate(z + bias, activation)
    return out[0] if single else out


def _pool_geometry(length: int, pool: int) -> Tuple[int, int]:
    if length < pool:
        return 1, length
    return length // pool, pool


def _maxpool(x: Tensor, pool: int) -> Tuple[Tensor, Tensor]:
    b, length, c = x.shape
    n_out, width = _pool_geometry(length, pool)
    windows = x[:, :n_out * width].reshape(b, n_out, width, c)
    arg = windows.argmax(axis=2)
    out = np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :]
    # absolute positions along the length axis
    idx = arg + (np.arange(n_out) * width)[None, :, None]
    return out, idx


def maxpool1d_forward(x: Tensor, pool: int = 2) -> Tensor:
    """Non-overlapping max-pooling; inputs shorter than ``pool`` collapse to one slot."""
    xb, single = _as_batch(x, 2)
    out, _ = _maxpool(xb, pool)
    return out[0] if single else out


def dense_forward(x: Tensor, weight: Tensor, bias: Tensor,
                  activation: Activation = Activation.IDENTITY) -> Tensor:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"input width {x.shape[-1]} does not match weight rows {weight.shape[0]}")
    return activate(x @ weight + bias, activation)


def flatten(x: Tensor) -> Tensor:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"flatten expects a rank-2 sample, got {x.shape}")
    return x.reshape(-1)


def concatenate(parts: Sequence[Tensor]) -> Tensor:
    if len(parts) == 0:
        raise ShapeError("nothing to concatenate")
    parts = [np.asarray(p, dtype=np.float64) for p in parts]
    if any(p.ndim != 1 for p in parts):
        raise ShapeError("concatenate expects rank-1 parts")
    return np.concatenate(parts)


def repeat_vector(v: Tensor, times: int) -> Tensor:
    if times < 1:
        raise LayerConfigError("times must be >= 1")
    v = np.asarray(v, dtype=np.float64)
    return np.repeat(v[..., None, :], times, axis=-2)


@dataclass(frozen=True)
class LstmState:
    h: Tensor
    c: Tensor

    def __post_init__(self):
        if np.shape(self.h) != np.shape(self.c):
            raise ShapeError(f"h {np.shape(self.h)} and c {np.shape(self.c)} differ")

    @classmethod
    def zeros(cls, shape) -> "LstmState":
        return cls(np.zeros(shape), np.zeros(shape))


def _gates(z: Tensor, units: int):
    s = sigmoid(z)
    g = np.tanh(z[..., 2 * units:3 * units])
    return s[..., :units], s[..., units:2 * units], g, s[..., 3 * units:]


def lstm_step(x: Tensor, state: LstmState, W: Tensor, U: Tensor, b: Tensor) -> LstmState:
    """One LSTM cell update. Gate blocks in W, U and b are ordered input, forget, cell, output."""
    units = U.shape[0]
    if W.shape[1] != 4 * units or U.shape != (units, 4 * units) or b.shape != (4 * units,):
        raise ShapeError(f"inconsistent LSTM weights {W.shape}, {U.shape}, {b.shape}")
    if np.shape(x)[-1] != W.shape[0] or np.shape(state.h)[-1] != units:
        raise ShapeError("input or state width does not match LSTM weights")
    i, f, g, o = _gates(x @ W + state.h @ U + b, units)
    c = f * state.c + i * g
    return LstmState(o * np.tanh(c), c)


def lstm_forward(seq: Tensor, W: Tensor, U: Tensor, b: Tensor,
                 return_sequences: bool = False) -> Tensor:
    xb, single = _as_batch(seq, 2)
    state = LstmState.zeros((xb.shape[0], U.shape[0]))
    hs = []
    for t in range(xb.shape[1]):
        state = lstm_step(xb[:, t], state, W, U, b)
        hs.append(state.h)
    out = np.stack(hs, axis=1) if return_sequences else state.h
    return out[0] if single else out


def convlstm1d_step(x: Tensor, state: LstmState, Wx: Tensor, Wh: Tensor, b: Tensor) -> LstmState:
    """ConvLSTM update on one frame.

    x is (w, channels); the state is (w - K + 1, filters). Input-to-state
    convolutions are valid, state-to-state convolutions are zero-padded "same".
    """
    xb, single = _as_batch(x, 2)
    hb = np.asarray(state.h, dtype=np.float64)
    cb = np.asarray(state.c, dtype=np.float64)
    if single:
        hb, cb = hb[None], cb[None]
    n_filters = Wh.shape[1]
    k = Wh.shape[2]
    xz, _ = _conv(xb, Wx)
    if xz.shape[1:] != (hb.shape[1], 4 * n_filters):
        raise ShapeError(f"state shape {hb.shape[1:]} does not match conv output {xz.shape[1:]}")
    hz, _ = _conv(hb, Wh, _same_padding(k))
    i, f, g, o = _gates(xz + hz + b, n_filters)
    c = f * cb + i * g
    h = o * np.tanh(c)
    if single:
        return LstmState(h[0], c[0])
    return LstmState(h, c)


# --------------------------------------------------------------------------
# layer objects
# --------------------------------------------------------------------------

class Layer:
    """Base layer. Subclasses set ``kind`` and implement the four hooks."""

    kind = "layer"

    def __init__(self, name: Optional[str] = None):
        self.name = name or self.kind
        self.params: Dict[str, Tensor] = {}
        self.grads: Dict[str, Tensor] = {}
        self.in_shape: Optional[Shape] = None
        self.out_shape: Optional[Shape] = None
        self._cache = None

    def build(self, in_shape: Shape, rng: np.random.Generator) -> Shape:
        self.in_shape = tuple(in_shape)
        self.out_shape = self.output_shape(self.in_shape)
        self._init_params(rng)
        return self.out_shape

    def output_shape(self, in_shape: Shape) -> Shape:
        return tuple(in_shape)

    def _init_params(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def backward(self, dy: Tensor) -> Tensor:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise StateError(f"{self.name}: backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    def _check_input(self, x: Tensor) -> None:
        if self.in_shape is not None and tuple(x.shape[1:]) != self.in_shape:
            raise ShapeError(f"{self.name}: expected input {self.in_shape}, got {tuple(x.shape[1:])}")

    def trace(self, prefix: str = "") -> List[Tuple[str, Shape]]:
        return [(prefix + self.name, self.out_shape)]

    def named_params(self, prefix: str = "") -> Iterator[Tuple[str, "Layer", str]]:
        for key in self.params:
            yield f"{prefix}{self.name}/{key}", self, key


class Conv1D(Layer):
    kind = "conv1d"

    def __init__(self, filters: int, kernel: int, activation=Activation.RELU, name=None):
        super().__init__(name)
        self.filters, self.kernel = filters, kernel
        self.activation = Activation(activation)

    def output_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"{self.name}: expected (length, channels), got {in_shape}")
        return (conv_output_length(in_shape[0], self.kernel), self.filters)

    def _init_params(self, rng):
        channels = self.in_shape[1]
        self.params["kernel"] = glorot_init((self.filters, channels, self.kernel), rng)
        self.params["bias"] = np.zeros(self.filters)

    def forward(self, x):
        self._check_input(x)
        z, cols = _conv(x, self.params["kernel"])
        z += self.params["bias"]
        y = activate(z, self.activation)
        self._cache = (cols, z, y, x.shape[1])
        return y

    def backward(self, dy):
        cols, z, y, in_len = self._take_cache()
        dz = activation_backward(self.activation, z, y, dy)
        dx, dk = _conv_backward(dz, cols, self.params["kernel"], in_len)
        self.grads = {"kernel": dk, "bias": dz.sum(axis=(0, 1))}
        return dx


class MaxPool1D(Layer):
    kind = "maxpool1d"

    def __init__(self, pool: int = 2, name=None):
        super().__init__(name)
        self.pool = pool

    def output_shape(self, in_shape):
        return (_pool_geometry(in_shape[0], self.pool)[0], in_shape[1])

    def forward(self, x):
        self._check_input(x)
        out, idx = _maxpool(x, self.pool)
        self._cache = (idx, x.shape)
        return out

    def backward(self, dy):
        idx, shape = self._take_cache()
        dx = np.zeros(shape)
        np.put_along_axis(dx, idx, dy, axis=1)
        return dx


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        self._check_input(x)
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._take_cache())


class Reshape(Layer):
    kind = "reshape"

    def __init__(self, target: Shape, name=None):
        super().__init__(name)
        self.target = tuple(target)

    def output_shape(self, in_shape):
        if int(np.prod(in_shape)) != int(np.prod(self.target)):
            raise ShapeError(f"{self.name}: cannot reshape {in_shape} to {self.target}")
        return self.target

    def forward(self, x):
        self._check_input(x)
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.target)

    def backward(self, dy):
        return dy.reshape(self._take_cache())


class Dense(Layer):
    """Fully connected layer acting on the last axis."""

    kind = "dense"

    def __init__(self, units: int, activation=Activation.RELU, name=None):
        super().__init__(name)
        self.units = units
        self.activation = Activation(activation)

    def output_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(f"{self.name}: expected a vector, got {in_shape}")
        return (self.units,)

    def _init_params(self, rng):
        self.params["weight"] = glorot_init((self.in_shape[-1], self.units), rng)
        self.params["bias"] = np.zeros(self.units)

    def forward(self, x):
        self._check_input(x)
        z = x @ self.params["weight"] + self.params["bias"]
        y = activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def backward(self, dy):
        x, z, y = self._take_cache()
        dz = activation_backward(self.activation, z, y, dy)
        n_in = x.shape[-1]
        self.grads = {
            "weight": x.reshape(-1, n_in).T @ dz.reshape(-1, self.units),
            "bias": dz.reshape(-1, self.units).sum(axis=0),
        }
        return dz @ self.params["weight"].T


class TimeDistributedDense(Dense):
    """The same dense map applied at every step of a (steps, features) sample."""

    kind = "time_distributed_dense"

    def output_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"{self.name}: expected (steps, features), got {in_shape}")
        return (in_shape[0], self.units)


class RepeatVector(Layer):
    kind = "repeat_vector"

    def __init__(self, times: int, name=None):
        super().__init__(name)
        if times < 1:
            raise LayerConfigError("times must be >= 1")
        self.times = times

    def output_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(f"{self.name}: expected a vector, got {in_shape}")
        return (self.times, in_shape[0])

    def forward(self, x):
        self._check_input(x)
        self._cache = True
        return repeat_vector(x, self.times)

    def backward(self, dy):
        self._take_cache()
        return dy.sum(axis=1)


class LSTM(Layer):
    kind = "lstm"

    def __init__(self, units: int, return_sequences: bool = False, name=None):
        super().__init__(name)
        self.units = units
        self.return_sequences = return_sequences

    def output_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"{self.name}: expected (steps, features), got {in_shape}")
        return (in_shape[0], self.units) if self.return_sequences else (self.units,)

    def _init_params(self, rng):
        d, H = self.in_shape[1], self.units
        self.params["W"] = glorot_init((d, 4 * H), rng)
        self.params["U"] = glorot_init((H, 4 * H), rng)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        self.params["b"] = b

    def forward(self, x):
        self._check_input(x)
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        B, T, d = x.shape
        H = self.units
        xw = (x.reshape(B * T, d) @ W).reshape(B, T, 4 * H) + b
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        steps = []
        hs = np.empty((B, T, H))
        for t in range(T):
            i, f, g, o = _gates(xw[:, t] + h @ U, H)
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps.append((h_prev, c_prev, i, f, g, o, tc))
        self._cache = (x, steps)
        return hs if self.return_sequences else h

    def backward(self, dy):
        x, steps = self._take_cache()
        W, U = self.params["W"], self.params["U"]
        B, T, d = x.shape
        H = self.units
        dZ = np.empty((B, T, 4 * H))
        dU = np.zeros_like(U)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            h_prev, c_prev, i, f, g, o, tc = steps[t]
            if self.return_sequences:
                dh = dh_next + dy[:, t]
            else:
                dh = dh_next + dy if t == T - 1 else dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = dZ[:, t]
            dz[:, :H] = dc * g * i * (1.0 - i)
            dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
            dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
            dU += h_prev.T @ dz
            dh_next = dz @ U.T
            dc_next = dc * f
        dZ2 = dZ.reshape(B * T, 4 * H)
        self.grads = {
            "W": x.reshape(B * T, d).T @ dZ2,
            "U": dU,
            "b": dZ2.sum(axis=0),
        }
        return (dZ2 @ W.T).reshape(B, T, d)


class ConvLSTM1D(Layer):
    """Convolutional LSTM over frames of shape (width, channels); returns the final state h."""

    kind = "convlstm1d"

    def __init__(self, filters: int, kernel: int, name=None):
        super().__init__(name)
        self.filters, self.kernel = filters, kernel

    def output_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"{self.name}: expected (steps, width, channels), got {in_shape}")
        return (conv_output_length(in_shape[1], self.kernel), self.filters)

    def _init_params(self, rng):
        F, K = self.filters, self.kernel
        self.params["Wx"] = glorot_init((4 * F, self.in_shape[2], K), rng)
        self.params["Wh"] = glorot_init((4 * F, F, K), rng)
        b = np.zeros(4 * F)
        b[F:2 * F] = 1.0
        self.params["b"] = b

    def forward(self, x):
        self._check_input(x)
        Wx, Wh, b = self.params["Wx"], self.params["Wh"], self.params["b"]
        B, T, w, ch = x.shape
        F = self.filters
        pad = _same_padding(self.kernel)
        xz, xcols = _conv(x.reshape(B * T, w, ch), Wx)
        wout = xz.shape[1]
        xz = xz.reshape(B, T, wout, 4 * F) + b
        h = np.zeros((B, wout, F))
        c = np.zeros((B, wout, F))
        steps = []
        for t in range(T):
            hz, hcols = _conv(h, Wh, pad)
            i, f, g, o = _gates(xz[:, t] + hz, F)
            c_prev = c
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            steps.append((hcols, c_prev, i, f, g, o, tc))
        self._cache = (x.shape, xcols, steps)
        return h

    def backward(self, dy):
        xshape, xcols, steps = self._take_cache()
        Wx, Wh = self.params["Wx"], self.params["Wh"]
        B, T, w, ch = xshape
        F = self.filters
        pad = _same_padding(self.kernel)
        wout = dy.shape[1]
        dZ = np.empty((B, T, wout, 4 * F))
        dWh = np.zeros_like(Wh)
        dh_next = dy
        dc_next = np.zeros_like(dy)
        for t in reversed(range(T)):
            hcols, c_prev, i, f, g, o, tc = steps[t]
            dh = dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = dZ[:, t]
            dz[..., :F] = dc * g * i * (1.0 - i)
            dz[..., F:2 * F] = dc * c_prev * f * (1.0 - f)
            dz[..., 2 * F:3 * F] = dc * i * (1.0 - g * g)
            dz[..., 3 * F:] = dh * tc * o * (1.0 - o)
            dh_next, dwh = _conv_backward(dz, hcols, Wh, wout, pad)
            dWh += dwh
            dc_next = dc * f
        dx, dWx = _conv_backward(dZ.reshape(B * T, wout, 4 * F), xcols, Wx, w)
        self.grads = {"Wx": dWx, "Wh": dWh, "b": dZ.sum(axis=(0, 1, 2))}
        return dx.reshape(xshape)


class Sequential(Layer):
    """An ordered stack of layers."""

    kind = "sequential"

    def __init__(self, layers: Sequence[Layer], name=None):
        super().__init__(name)
        self.layers = list(layers)
        counts: Dict[str, int] = {}
        for layer in self.layers:
            if layer.name == layer.kind:
                counts[layer.kind] = counts.get(layer.kind, 0) + 1
                layer.name = f"{layer.kind}_{counts[layer.kind]}"

    def build(self, in_shape, rng):
        self.in_shape = tuple(in_shape)
        shape = self.in_shape
        for layer in self.layers:
            shape = layer.build(shape, rng)
        self.out_shape = shape
        return shape

    def output_shape(self, in_shape):
        shape = tuple(in_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def trace(self, prefix=""):
        out = []
        for layer in self.layers:
            out.extend(layer.trace(prefix))
        return out

    def named_params(self, prefix=""):
        for layer in self.layers:
            yield from layer.named_params(prefix)


class MultiHead(Layer):
    """Fan-out one input channel per head, fan-in by concatenating the heads' vectors."""

    kind = "multihead"

    def __init__(self, heads: Sequence[Sequential], name=None):
        super().__init__(name)
        self.heads = list(heads)
        for n, head in enumerate(self.heads):
            head.name = f"head{n}"

    def build(self, in_shape, rng):
        self.in_shape = tuple(in_shape)
        if len(in_shape) != 2 or in_shape[1] != len(self.heads):
            raise ShapeError(f"{self.name}: {len(self.heads)} heads need (length, {len(self.heads)}) input")
        for head in self.heads:
            head.build((in_shape[0], 1), rng)
        self.out_shape = self.output_shape(self.in_shape)
        return self.out_shape

    def output_shape(self, in_shape):
        total = 0
        for head in self.heads:
            s = head.output_shape((in_shape[0], 1))
            if len(s) != 1:
                raise ShapeError(f"{self.name}: head output {s} is not a vector")
            total += s[0]
        return (total,)

    def forward(self, x):
        self._check_input(x)
        outs = [head.forward(x[..., n:n + 1]) for n, head in enumerate(self.heads)]
        self._cache = [o.shape[1] for o in outs]
        return np.concatenate(outs, axis=1)

    def backward(self, dy):
        widths = self._take_cache()
        splits = np.cumsum(widths)[:-1]
        grads = [head.backward(part) for head, part in zip(self.heads, np.split(dy, splits, axis=1))]
        return np.concatenate(grads, axis=-1)

    def trace(self, prefix=""):
        out = []
        for head in self.heads:
            out.extend(head.trace(f"{prefix}{head.name}/"))
        out.append((prefix + "concatenate", self.out_shape))
        return out

    def named_params(self, prefix=""):
        for head in self.heads:
            yield from head.named_params(f"{prefix}{head.name}/")


def layer_backward(layer: Layer, upstream: Tensor) -> Tuple[Tensor, Dict[str, Tensor]]:
    """Backpropagate ``upstream`` through ``layer``'s last forward call.

    Returns the gradient w.r.t. the layer input and a dict of parameter
    gradients keyed like ``layer.params``.
    """
    dx = layer.backward(np.asarray(upstream, dtype=np.float64))
    return dx, dict(layer.grads)
