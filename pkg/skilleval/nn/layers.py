# This file is part of skilleval.
#
# skilleval is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# skilleval is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with skilleval.  If not, see <http://www.gnu.org/licenses/>.

"""
Layer primitives and their derivatives. Feature maps are ``channels x time`` float64 matrices.

Convolutions are cross-correlations (no kernel flip) with stride 1, kernel length 3 and SAME zero
padding, so every stage keeps the input length.

.. currentmodule:: skilleval.nn.layers
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from skilleval.exc import ChannelMismatch, InvalidConfig, ShapeMismatch

#: The convolution kernel length.
KERNEL_SIZE = 3

#: The floor applied to a probability before taking its log.
EPS_LOG = 1e-12


def glorot_uniform_init(
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator,
    size: Union[int, Tuple[int, ...], None] = None,
) -> np.ndarray:
    """
    Draws weights i.i.d. from ``U(-a, a)`` with ``a = sqrt(6 / (fan_in + fan_out))``.

    For a convolution, both fans include the kernel length: ``fan_in = in_channels * 3`` and
    ``fan_out = out_channels * 3``.

    :param fan_in: The fan-in of the layer.
    :param fan_out: The fan-out of the layer.
    :param rng: The generator to draw from.
    :param size: The shape of the tensor; ``(fan_out, fan_in)`` when omitted.
    """
    if fan_in < 1 or fan_out < 1:
        raise InvalidConfig(f"Fans must be >= 1, got fan_in={fan_in}, fan_out={fan_out}")

    if size is None:
        size = (fan_out, fan_in)

    bound = glorot_bound(fan_in, fan_out)
    return rng.uniform(-bound, bound, size=size)


def glorot_bound(fan_in: int, fan_out: int) -> float:
    """
    :return: The half-width of the Glorot uniform distribution.
    """
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def conv1d_forward(x: np.ndarray, params: "Conv1dParams") -> np.ndarray:
    """
    Computes ``out[o, t] = b[o] + sum_c sum_k W[o, c, k] * x_pad[c, t + k - 1]``.

    :param x: The input map, ``in_channels x l``.
    :param params: The convolution parameters.
    :return: The output map, ``out_channels x l``.
    """
    kernels = params.kernels
    if x.shape[0] != kernels.shape[1]:
        raise ChannelMismatch(kernels.shape[1], x.shape[0])

    length = x.shape[1]
    padded = np.pad(x, ((0, 0), (1, 1)))
    out = np.empty((kernels.shape[0], length))
    out[:] = params.biases[:, None]
    for k in range(KERNEL_SIZE):
        out += kernels[:, :, k] @ padded[:, k : k + length]

    return out


def conv1d_backward(
    x: np.ndarray, params: "Conv1dParams", grad_out: np.ndarray, need_input_grad: bool = True
) -> Tuple[Optional[np.ndarray], np.ndarray, np.ndarray]:
    """
    Back-propagates through :func:`conv1d_forward`.

    :param x: The input map the forward pass saw.
    :param params: The parameters the forward pass used.
    :param grad_out: The gradient of the loss w.r.t. the (pre-activation) output.
    :param need_input_grad: If False, the input gradient is skipped and returned as None.
    :return: A 3-tuple of (input gradient, kernel gradient, bias gradient).
    """
    kernels = params.kernels
    length = x.shape[1]
    padded = np.pad(x, ((0, 0), (1, 1)))

    grad_kernels = np.empty_like(kernels)
    for k in range(KERNEL_SIZE):
        grad_kernels[:, :, k] = grad_out @ padded[:, k : k + length].T

    grad_biases = grad_out.sum(axis=1)

    grad_x = None
    if need_input_grad:
        grad_padded = np.zeros_like(padded)
        for k in range(KERNEL_SIZE):
            grad_padded[:, k : k + length] += kernels[:, :, k].T @ grad_out

        grad_x = grad_padded[:, 1:-1]

    return grad_x, grad_kernels, grad_biases


def relu(x: np.ndarray) -> np.ndarray:
    """
    :return: ``max(0, x)`` elementwise.
    """
    return np.maximum(x, 0.0)


def relu_backward(activated: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """
    Masks a gradient by the ReLU's active set. The subgradient at exactly 0 is 0.

    :param activated: The ReLU output of the forward pass.
    :param grad: The gradient w.r.t. the ReLU output.
    """
    return np.where(activated > 0.0, grad, 0.0)


def gap(x: np.ndarray) -> np.ndarray:
    """
    Global average pooling: the per-channel mean over time.
    """
    return x.mean(axis=1)


def softmax(z: np.ndarray) -> np.ndarray:
    """
    A numerically safe softmax (the maximum is subtracted first).
    """
    shifted = np.exp(z - np.max(z))
    return shifted / shifted.sum()


@dataclass(frozen=True, eq=False)
class Conv1dParams:
    """
    The kernels (``out x in x 3``) and biases (``out``) of one convolution.
    """

    kernels: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        kernels = np.array(self.kernels, dtype=np.float64)
        biases = np.array(self.biases, dtype=np.float64)
        if kernels.ndim != 3 or kernels.shape[2] != KERNEL_SIZE:
            raise ShapeMismatch(f"Kernels must be out x in x {KERNEL_SIZE}, got {kernels.shape}")

        if biases.shape != (kernels.shape[0],):
            raise ShapeMismatch(f"Biases must have shape ({kernels.shape[0]},), got {biases.shape}")

        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "biases", biases)

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @classmethod
    def glorot(
        cls, in_channels: int, out_channels: int, rng: np.random.Generator
    ) -> "Conv1dParams":
        """
        Makes a Glorot-uniform initialized convolution with zero biases.
        """
        kernels = glorot_uniform_init(
            in_channels * KERNEL_SIZE,
            out_channels * KERNEL_SIZE,
            rng,
            size=(out_channels, in_channels, KERNEL_SIZE),
        )
        return cls(kernels=kernels, biases=np.zeros(out_channels))

    @classmethod
    def zeros(cls, in_channels: int, out_channels: int) -> "Conv1dParams":
        return cls(
            kernels=np.zeros((out_channels, in_channels, KERNEL_SIZE)),
            biases=np.zeros(out_channels),
        )
