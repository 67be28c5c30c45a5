"""Dense float64 tensors and elementwise activations.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The helpers here
add the checks the rest of the engine relies on: explicit shapes, strict
matmul shape rules and a hard failure on NaN/Inf.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence, Union

import numpy as np

Tensor = np.ndarray


class ShapeError(ValueError):
    """Raised when tensor shapes do not compose."""


class NonFiniteError(FloatingPointError):
    """Raised when a tensor contains NaN or Inf."""


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    IDENTITY = "identity"


def check_finite(t: Tensor, what: str = "tensor") -> Tensor:
    if not np.all(np.isfinite(t)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return t


def tensor_create(shape: Sequence[int], fill: Union[float, Sequence[float], np.ndarray]) -> Tensor:
    """Build a float64 tensor of ``shape`` from a scalar or a flat row-major sequence."""
    shape = tuple(int(d) for d in shape)
    if not shape or any(d < 1 for d in shape):
        raise ShapeError(f"invalid shape {shape}")
    if np.isscalar(fill):
        out = np.full(shape, float(fill))
    else:
        flat = np.asarray(fill, dtype=np.float64).ravel()
        if flat.size != int(np.prod(shape)):
            raise ShapeError(f"{flat.size} values do not fill shape {shape}")
        out = flat.reshape(shape).copy()
    return check_finite(out)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def sigmoid(x: Tensor) -> Tensor:
    # tanh form never overflows
    return 0.5 * np.tanh(0.5 * np.asarray(x, dtype=np.float64)) + 0.5


def activate(t: Tensor, kind: Union[Activation, str]) -> Tensor:
    kind = Activation(kind)
    t = np.asarray(t, dtype=np.float64)
    if kind is Activation.RELU:
        return np.maximum(t, 0.0)
    if kind is Activation.SIGMOID:
        return sigmoid(t)
    if kind is Activation.TANH:
        return np.tanh(t)
    return t.copy()


def activate_grad(kind: Union[Activation, str], preactivation: Tensor) -> Tensor:
    """Elementwise derivative of ``activate`` at ``preactivation``.

    The relu derivative at exactly zero is taken as 0.
    """
    kind = Activation(kind)
    z = np.asarray(preactivation, dtype=np.float64)
    if kind is Activation.RELU:
        return (z > 0).astype(np.float64)
    if kind is Activation.SIGMOID:
        s = sigmoid(z)
        return s * (1.0 - s)
    if kind is Activation.TANH:
        return 1.0 - np.tanh(z) ** 2
    return np.ones_like(z)


def activation_backward(kind: Activation, z: Tensor, y: Tensor, upstream: Tensor) -> Tensor:
    """Chain ``upstream`` through an activation, reusing the cached output ``y``."""
    if kind is Activation.RELU:
        return upstream * (z > 0)
    if kind is Activation.SIGMOID:
        return upstream * y * (1.0 - y)
    if kind is Activation.TANH:
        return upstream * (1.0 - y * y)
    return upstream
