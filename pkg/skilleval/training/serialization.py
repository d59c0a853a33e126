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
Saving and loading trained models.

A model file is a UTF-8 JSON document::

    {
      "format_version": 1,
      "comment": "<the tensor order>",
      "head": "classification" | "regression",
      "layout": {"groups": [...]},
      "architecture": {...},
      "params": {
        "layer1": [{"name": ..., "kernels": [...], "biases": [...]}, ... 20 entries],
        "layer2": [... 4 entries],
        "layer3": {"name": ..., "kernels": [...], "biases": [...]},
        "head_w": [[...]],
        "head_b": [...]
      },
      "standardization": {"mean": [...], "std": [...]}
    }

Arrays are nested row-major lists. Floats are written as the shortest decimal that reads back as
the same double, so a save/load round trip is exact.

.. currentmodule:: skilleval.training.serialization
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from skilleval.exc import CorruptModel, IoError, VersionMismatch
from skilleval.kinematics.layout import ChannelLayout
from skilleval.kinematics.standardization import StandardizationStats
from skilleval.nn.layers import KERNEL_SIZE, Conv1dParams
from skilleval.nn.model import (
    LAYER1_FILTERS,
    LAYER2_FILTERS,
    LAYER3_FILTERS,
    FcnModel,
    HeadKind,
    build_model,
)
from skilleval.util import PathLike, write_json

logger = logging.getLogger("skilleval.training")

#: The model file format written by :func:`save_model`.
FORMAT_VERSION = 1

_COMMENT = (
    "params.layer1 holds the 20 sub-cluster convolutions group-major (ML, MR, SL, SR; each "
    "cartesian, linear_velocity, rotational_velocity, rotation_matrix, gripper); params.layer2 "
    "the 4 manipulator convolutions in group order; params.layer3 the final convolution. "
    "Kernels are out x in x 3, row-major; head_w is n_out x 32."
)


def _conv_to_dict(name: str, conv: Conv1dParams) -> Dict[str, Any]:
    return {"name": name, "kernels": conv.kernels.tolist(), "biases": conv.biases.tolist()}


def model_to_dict(model: FcnModel, stats: StandardizationStats) -> Dict[str, Any]:
    """
    :return: The JSON document :func:`save_model` writes.
    """
    layer1_names = [
        f"layer1.{group.name}.{n}"
        for group in model.layout.groups
        for n in range(len(group.subclusters))
    ]
    layer2_names = [f"layer2.{group.name}" for group in model.layout.groups]

    return {
        "format_version": FORMAT_VERSION,
        "comment": _COMMENT,
        "head": model.head_kind.value,
        "layout": model.layout.to_dict(),
        "architecture": {
            "kernel_size": KERNEL_SIZE,
            "layer1_filters": LAYER1_FILTERS,
            "layer2_filters": LAYER2_FILTERS,
            "layer3_filters": LAYER3_FILTERS,
            "n_out": model.n_out,
            "parameter_count": model.parameter_count(),
        },
        "params": {
            "layer1": [_conv_to_dict(n, c) for n, c in zip(layer1_names, model.layer1)],
            "layer2": [_conv_to_dict(n, c) for n, c in zip(layer2_names, model.layer2)],
            "layer3": _conv_to_dict("layer3", model.layer3),
            "head_w": model.head_w.tolist(),
            "head_b": model.head_b.tolist(),
        },
        "standardization": stats.to_dict(),
    }


def save_model(model: FcnModel, stats: StandardizationStats, path: PathLike) -> None:
    """
    Writes a model and the standardization it was trained with.

    :param model: The model.
    :param stats: The standardization statistics of the training split.
    :param path: The file to write.
    """
    write_json(path, model_to_dict(model, stats))
    logger.info(
        "Saved %s model (%d parameters) to %s", model.head_kind.value, model.parameter_count(), path
    )


def _conv_tensors(raw: Any) -> List[np.ndarray]:
    return [
        np.asarray(raw["kernels"], dtype=np.float64),
        np.asarray(raw["biases"], dtype=np.float64),
    ]


def model_from_dict(data: Any) -> Tuple[FcnModel, StandardizationStats]:
    """
    The inverse of :func:`model_to_dict`.
    """
    if not isinstance(data, dict):
        raise CorruptModel("Model file is not a JSON object")

    version = data.get("format_version")
    if version != FORMAT_VERSION or isinstance(version, bool):
        raise VersionMismatch(version, FORMAT_VERSION)

    try:
        head_kind = HeadKind(data["head"])
        layout = ChannelLayout.from_dict(data["layout"])
        params = data["params"]

        tensors: List[np.ndarray] = []
        for raw in (*params["layer1"], *params["layer2"], params["layer3"]):
            tensors.extend(_conv_tensors(raw))

        tensors.append(np.asarray(params["head_w"], dtype=np.float64))
        tensors.append(np.asarray(params["head_b"], dtype=np.float64))

        model = build_model(head_kind, layout, tensors)
        stats = StandardizationStats.from_dict(data["standardization"])
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptModel(f"Malformed model file: {e}") from e

    return model, stats


def load_model(path: PathLike) -> Tuple[FcnModel, StandardizationStats]:
    """
    Reads a model written by :func:`save_model`.

    :param path: The file to read.
    :return: A 2-tuple of (model, standardization).
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptModel(f"{path} is not valid JSON: {e}") from e

    model, stats = model_from_dict(data)
    logger.debug("Loaded %s model from %s", model.head_kind.value, path)
    return model, stats
