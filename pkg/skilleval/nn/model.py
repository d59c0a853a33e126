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
Parameters of the grouped fully convolutional network.

The network has three convolution stages:

 1. one convolution per (manipulator, sub-cluster) pair, 8 filters each; the five outputs of a
    manipulator are concatenated into 40 channels
 2. one convolution per manipulator, 16 filters each; the four outputs are concatenated into 64
    channels
 3. one convolution over everything, 32 filters

followed by global average pooling and a dense head (3 softmax outputs or 6 linear outputs).

.. currentmodule:: skilleval.nn.model
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from skilleval.exc import InvalidConfig, ShapeMismatch
from skilleval.kinematics.layout import (
    GROUP_NAMES,
    SUBCLUSTER_SIZES,
    ChannelLayout,
    default_channel_layout,
)
from skilleval.kinematics.skill import OSATS_COMPONENTS, skill_names
from skilleval.nn.layers import KERNEL_SIZE, Conv1dParams, glorot_uniform_init

#: Filters per sub-cluster convolution.
LAYER1_FILTERS = 8

#: Filters per manipulator convolution.
LAYER2_FILTERS = 16

#: Filters of the final convolution; the ``K`` of the class activation map.
LAYER3_FILTERS = 32


class HeadKind(enum.Enum):
    """
    The kind of output head.
    """

    #: Three softmax outputs, one per skill level.
    CLASSIFICATION = "classification"

    #: Six linear outputs, one per OSATS component.
    REGRESSION = "regression"

    @property
    def n_out(self) -> int:
        """
        :return: The number of output neurons.
        """
        return 3 if self is HeadKind.CLASSIFICATION else 6

    @property
    def output_names(self) -> List[str]:
        """
        :return: The name of each output neuron.
        """
        if self is HeadKind.CLASSIFICATION:
            return list(skill_names())

        return list(OSATS_COMPONENTS)


def _expected_shapes(head_kind: HeadKind, layout: ChannelLayout) -> List[Tuple[str, tuple]]:
    """
    The name and shape of every parameter tensor, in the fixed serialization order.
    """
    shapes = []
    for group in layout.groups:
        for n, sub in enumerate(group.subclusters):
            prefix = f"layer1.{group.name}.{n}"
            shapes.append((f"{prefix}.kernels", (LAYER1_FILTERS, len(sub), KERNEL_SIZE)))
            shapes.append((f"{prefix}.biases", (LAYER1_FILTERS,)))

    layer2_in = LAYER1_FILTERS * len(SUBCLUSTER_SIZES)
    for name in GROUP_NAMES:
        shapes.append((f"layer2.{name}.kernels", (LAYER2_FILTERS, layer2_in, KERNEL_SIZE)))
        shapes.append((f"layer2.{name}.biases", (LAYER2_FILTERS,)))

    layer3_in = LAYER2_FILTERS * len(GROUP_NAMES)
    shapes.append(("layer3.kernels", (LAYER3_FILTERS, layer3_in, KERNEL_SIZE)))
    shapes.append(("layer3.biases", (LAYER3_FILTERS,)))
    shapes.append(("head.weights", (head_kind.n_out, LAYER3_FILTERS)))
    shapes.append(("head.biases", (head_kind.n_out,)))
    return shapes


@dataclass(frozen=True, eq=False)
class FcnModel:
    """
    Every parameter of the network. Instances are immutable; optimizers build new ones with
    :meth:`with_parameters`.
    """

    #: The kind of output head.
    head_kind: HeadKind

    #: The channel layout the first stage slices its input with.
    layout: ChannelLayout

    #: The twenty sub-cluster convolutions, group-major.
    layer1: Tuple[Conv1dParams, ...]

    #: The four manipulator convolutions.
    layer2: Tuple[Conv1dParams, ...]

    #: The final convolution.
    layer3: Conv1dParams

    #: The head weights, ``n_out x 32``.
    head_w: np.ndarray

    #: The head biases, ``n_out``.
    head_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "head_w", np.array(self.head_w, dtype=np.float64))
        object.__setattr__(self, "head_b", np.array(self.head_b, dtype=np.float64))
        object.__setattr__(self, "layer1", tuple(self.layer1))
        object.__setattr__(self, "layer2", tuple(self.layer2))

        if len(self.layer1) != len(GROUP_NAMES) * len(SUBCLUSTER_SIZES):
            raise ShapeMismatch(f"Expected 20 sub-cluster convolutions, got {len(self.layer1)}")

        if len(self.layer2) != len(GROUP_NAMES):
            raise ShapeMismatch(f"Expected 4 manipulator convolutions, got {len(self.layer2)}")

        for (name, expected), tensor in zip(
            _expected_shapes(self.head_kind, self.layout), self.parameters()
        ):
            if tensor.shape != expected:
                raise ShapeMismatch(f"{name} has shape {tensor.shape}, expected {expected}")

            if not np.all(np.isfinite(tensor)):
                raise ShapeMismatch(f"{name} contains non-finite values")

    @property
    def n_out(self) -> int:
        return self.head_kind.n_out

    def named_parameters(self) -> List[Tuple[str, np.ndarray]]:
        """
        :return: ``(name, tensor)`` pairs in the fixed order: layer 1 (group-major, kernels then
            biases), layer 2, layer 3, head weights, head biases.
        """
        names = [name for name, _ in _expected_shapes(self.head_kind, self.layout)]
        return list(zip(names, self.parameters()))

    def parameters(self) -> List[np.ndarray]:
        """
        :return: Every parameter tensor, in the order of :meth:`named_parameters`.
        """
        tensors = []
        for conv in (*self.layer1, *self.layer2, self.layer3):
            tensors.append(conv.kernels)
            tensors.append(conv.biases)

        tensors.append(self.head_w)
        tensors.append(self.head_b)
        return tensors

    def with_parameters(self, tensors: Sequence[np.ndarray]) -> "FcnModel":
        """
        Makes a model with the same architecture and new parameter values.

        :param tensors: Tensors in the order of :meth:`parameters`.
        """
        return build_model(self.head_kind, self.layout, tensors)

    def parameter_count(self) -> int:
        return sum(t.size for t in self.parameters())


def build_model(
    head_kind: HeadKind, layout: ChannelLayout, tensors: Sequence[np.ndarray]
) -> FcnModel:
    """
    Assembles a model from flat tensors in the order of :meth:`FcnModel.parameters`.
    """
    expected = _expected_shapes(head_kind, layout)
    if len(tensors) != len(expected):
        raise ShapeMismatch(f"Expected {len(expected)} tensors, got {len(tensors)}")

    convs = [Conv1dParams(tensors[i], tensors[i + 1]) for i in range(0, len(tensors) - 2, 2)]
    n1 = len(GROUP_NAMES) * len(SUBCLUSTER_SIZES)
    n2 = len(GROUP_NAMES)
    return FcnModel(
        head_kind=head_kind,
        layout=layout,
        layer1=tuple(convs[:n1]),
        layer2=tuple(convs[n1 : n1 + n2]),
        layer3=convs[n1 + n2],
        head_w=tensors[-2],
        head_b=tensors[-1],
    )


def parameter_shapes(head_kind: HeadKind, layout: Optional[ChannelLayout] = None):
    """
    :return: The ``(name, shape)`` of every parameter tensor, in serialization order.
    """
    return _expected_shapes(head_kind, layout or default_channel_layout())


def expected_parameter_count(head_kind: HeadKind) -> int:
    """
    The closed-form parameter count of the architecture.
    """
    layer1 = sum(LAYER1_FILTERS * size * KERNEL_SIZE + LAYER1_FILTERS for size in SUBCLUSTER_SIZES)
    layer1 *= len(GROUP_NAMES)
    layer2 = len(GROUP_NAMES) * (
        LAYER2_FILTERS * LAYER1_FILTERS * len(SUBCLUSTER_SIZES) * KERNEL_SIZE + LAYER2_FILTERS
    )
    layer3 = LAYER3_FILTERS * LAYER2_FILTERS * len(GROUP_NAMES) * KERNEL_SIZE + LAYER3_FILTERS
    head = head_kind.n_out * LAYER3_FILTERS + head_kind.n_out
    return layer1 + layer2 + layer3 + head


def init_model(
    head_kind: HeadKind,
    rng: Optional[np.random.Generator],
    layout: Optional[ChannelLayout] = None,
) -> FcnModel:
    """
    Makes a new model. Weights are Glorot-uniform, biases are zero.

    :param head_kind: The kind of output head.
    :param rng: The generator to draw weights from, or None for an all-zero model.
    :param layout: The channel layout, or None for the default layout.
    """
    if not isinstance(head_kind, HeadKind):
        raise InvalidConfig(f"Unknown head kind {head_kind!r}")

    layout = layout or default_channel_layout()

    def make(in_channels: int, out_channels: int) -> Conv1dParams:
        if rng is None:
            return Conv1dParams.zeros(in_channels, out_channels)

        return Conv1dParams.glorot(in_channels, out_channels, rng)

    layer1 = tuple(make(len(sub), LAYER1_FILTERS) for sub in layout.subclusters)
    layer2 = tuple(
        make(LAYER1_FILTERS * len(SUBCLUSTER_SIZES), LAYER2_FILTERS) for _ in GROUP_NAMES
    )
    layer3 = make(LAYER2_FILTERS * len(GROUP_NAMES), LAYER3_FILTERS)

    if rng is None:
        head_w = np.zeros((head_kind.n_out, LAYER3_FILTERS))
    else:
        head_w = glorot_uniform_init(LAYER3_FILTERS, head_kind.n_out, rng)

    return FcnModel(
        head_kind=head_kind,
        layout=layout,
        layer1=layer1,
        layer2=layer2,
        layer3=layer3,
        head_w=head_w,
        head_b=np.zeros(head_kind.n_out),
    )
