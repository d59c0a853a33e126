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
The forward pass, the losses, and reverse-mode gradients of the grouped network.

.. currentmodule:: skilleval.nn.network
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from skilleval.exc import ChannelMismatch, HeadMismatch, LengthMismatch, LengthTooShort
from skilleval.kinematics.layout import N_CHANNELS
from skilleval.kinematics.skill import OsatsScores, SkillLevel
from skilleval.kinematics.trial import MIN_LENGTH
from skilleval.nn.layers import (
    EPS_LOG,
    conv1d_backward,
    conv1d_forward,
    gap,
    relu,
    relu_backward,
    softmax,
)
from skilleval.nn.model import FcnModel, HeadKind

Target = Union[SkillLevel, OsatsScores, np.ndarray]


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """
    Every intermediate of one forward pass. All feature maps have the input length ``l``.
    """

    #: The kind of head that produced this trace.
    head_kind: HeadKind

    #: The input, ``76 x l`` (channels first).
    inputs: np.ndarray

    #: The twenty post-ReLU sub-cluster maps (``8 x l`` each), group-major.
    stage1: Tuple[np.ndarray, ...]

    #: The four post-ReLU manipulator maps (``16 x l`` each).
    stage2: Tuple[np.ndarray, ...]

    #: The post-ReLU final maps ``A``, ``32 x l``.
    activations: np.ndarray

    #: The pooled vector ``g``, 32 values.
    pooled: np.ndarray

    #: The pre-activation outputs ``z``.
    z: np.ndarray

    #: The softmax probabilities, for classification heads only.
    p: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return self.inputs.shape[1]

    @property
    def outputs(self) -> np.ndarray:
        """
        :return: The probabilities for a classification head, ``z`` for a regression head.
        """
        return self.p if self.p is not None else self.z

    def activation_pattern(self) -> np.ndarray:
        """
        :return: A flat boolean vector of which ReLU units are active.
        """
        maps = [*self.stage1, *self.stage2, self.activations]
        return np.concatenate([m.ravel() > 0.0 for m in maps])


@dataclass(frozen=True, eq=False)
class Gradients:
    """
    One gradient tensor per model parameter tensor, in the order of
    :meth:`.FcnModel.named_parameters`.
    """

    names: Tuple[str, ...]
    tensors: Tuple[np.ndarray, ...]

    def __iter__(self):
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def named(self) -> List[Tuple[str, np.ndarray]]:
        return list(zip(self.names, self.tensors))

    def max_abs(self) -> float:
        """
        :return: The largest absolute gradient entry.
        """
        return max(float(np.max(np.abs(t))) for t in self.tensors)


def _check_input(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != N_CHANNELS:
        raise ChannelMismatch(N_CHANNELS, samples.shape[-1] if samples.ndim else 0)

    if samples.shape[0] < MIN_LENGTH:
        raise LengthTooShort(samples.shape[0], MIN_LENGTH)

    return samples


def forward(model: FcnModel, samples: np.ndarray) -> ForwardTrace:
    """
    Runs the network on one trial.

    :param model: The model.
    :param samples: The trial samples, ``l x 76`` (timestamps first, as stored in a trial).
    :return: The :class:`.ForwardTrace` with every intermediate.
    """
    x = _check_input(samples).T

    stage1: List[np.ndarray] = []
    stage2: List[np.ndarray] = []
    n = 0
    for g, group in enumerate(model.layout.groups):
        group_maps = []
        for sub in group.subclusters:
            group_maps.append(relu(conv1d_forward(x[list(sub)], model.layer1[n])))
            n += 1

        stage1.extend(group_maps)
        stage2.append(relu(conv1d_forward(np.concatenate(group_maps), model.layer2[g])))

    activations = relu(conv1d_forward(np.concatenate(stage2), model.layer3))
    pooled = gap(activations)
    z = model.head_w @ pooled + model.head_b
    p = softmax(z) if model.head_kind is HeadKind.CLASSIFICATION else None

    return ForwardTrace(
        head_kind=model.head_kind,
        inputs=x,
        stage1=tuple(stage1),
        stage2=tuple(stage2),
        activations=activations,
        pooled=pooled,
        z=z,
        p=p,
    )


def cross_entropy_loss(p: np.ndarray, label: SkillLevel) -> float:
    """
    :return: ``-log(max(p[label], 1e-12))``. Below the floor the loss is constant, and
        :func:`backward` returns a zero gradient there.
    """
    return float(-np.log(max(float(p[int(label)]), EPS_LOG)))


def mse_loss(y_hat: np.ndarray, y: np.ndarray) -> float:
    """
    :return: The mean of the squared differences.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise LengthMismatch(y_hat.size, y.size)

    return float(np.mean((y - y_hat) ** 2))


def _regression_target(target: Target) -> np.ndarray:
    if isinstance(target, OsatsScores):
        return target.as_array()

    if isinstance(target, SkillLevel):
        raise HeadMismatch("A regression head needs OSATS targets, got a skill level")

    return np.asarray(target, dtype=np.float64)


def _check_target(head_kind: HeadKind, target: Target) -> Target:
    if head_kind is HeadKind.CLASSIFICATION:
        if not isinstance(target, (SkillLevel, int)) or isinstance(target, bool):
            raise HeadMismatch(f"A classification head needs a skill level, got {target!r}")

        return SkillLevel(int(target))

    y = _regression_target(target)
    if y.shape != (head_kind.n_out,):
        raise HeadMismatch(f"A regression head needs {head_kind.n_out} targets, got {y.shape}")

    return y


def data_loss(trace: ForwardTrace, target: Target) -> float:
    """
    The unregularized loss of one trial: cross-entropy for classification, MSE for regression.
    """
    target = _check_target(trace.head_kind, target)
    if trace.head_kind is HeadKind.CLASSIFICATION:
        return cross_entropy_loss(trace.p, target)

    return mse_loss(trace.z, target)


def backward(model: FcnModel, trace: ForwardTrace, target: Target) -> Gradients:
    """
    Computes the gradient of the per-trial loss w.r.t. every parameter tensor.

    :param model: The model the trace was produced with.
    :param trace: The forward trace.
    :param target: A :class:`.SkillLevel` for classification, six OSATS values for regression.
    """
    if trace.head_kind is not model.head_kind:
        raise HeadMismatch(f"Trace is from a {trace.head_kind.value} head, model is not")

    target = _check_target(model.head_kind, target)
    if model.head_kind is HeadKind.CLASSIFICATION:
        if trace.p[int(target)] < EPS_LOG:
            # the loss is floored at -log(EPS_LOG) and flat there
            grad_z = np.zeros_like(trace.p)
        else:
            grad_z = trace.p.copy()
            grad_z[int(target)] -= 1.0
    else:
        grad_z = (2.0 / model.n_out) * (trace.z - target)

    grad_head_w = np.outer(grad_z, trace.pooled)
    grad_head_b = grad_z
    grad_pooled = model.head_w.T @ grad_z

    length = trace.length
    grad_a = np.repeat(grad_pooled[:, None] / length, length, axis=1)
    grad_a = relu_backward(trace.activations, grad_a)

    stage3_in = np.concatenate(trace.stage2)
    grad_stage3_in, grad_l3_k, grad_l3_b = conv1d_backward(stage3_in, model.layer3, grad_a)

    layer1_grads: List[Tuple[np.ndarray, np.ndarray]] = []
    layer2_grads: List[Tuple[np.ndarray, np.ndarray]] = []
    width2 = model.layer2[0].out_channels
    n = 0
    for g, group in enumerate(model.layout.groups):
        grad_s2 = relu_backward(trace.stage2[g], grad_stage3_in[g * width2 : (g + 1) * width2])

        n_subs = len(group.subclusters)
        group_maps = trace.stage1[n : n + n_subs]
        grad_group_in, grad_l2_k, grad_l2_b = conv1d_backward(
            np.concatenate(group_maps), model.layer2[g], grad_s2
        )
        layer2_grads.append((grad_l2_k, grad_l2_b))

        offset = 0
        for sub, s1 in zip(group.subclusters, group_maps):
            width1 = s1.shape[0]
            grad_s1 = relu_backward(s1, grad_group_in[offset : offset + width1])
            offset += width1

            _, grad_l1_k, grad_l1_b = conv1d_backward(
                trace.inputs[list(sub)], model.layer1[n], grad_s1, need_input_grad=False
            )
            layer1_grads.append((grad_l1_k, grad_l1_b))
            n += 1

    tensors: List[np.ndarray] = []
    for kernels, biases in (*layer1_grads, *layer2_grads, (grad_l3_k, grad_l3_b)):
        tensors.append(kernels)
        tensors.append(biases)

    tensors.append(grad_head_w)
    tensors.append(grad_head_b)

    names = tuple(name for name, _ in model.named_parameters())
    return Gradients(names=names, tensors=tuple(tensors))


def predict_outputs(model: FcnModel, samples: np.ndarray) -> np.ndarray:
    """
    :return: The probabilities (classification) or raw outputs (regression) for one trial.
    """
    return forward(model, samples).outputs
