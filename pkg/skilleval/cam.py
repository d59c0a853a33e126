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
Class activation maps over time.

For an output neuron ``c``, the map ``M_c(t) = sum_k W[c, k] * A[k, t]`` is the contribution of
each timestamp to that output. Since the head sees the time-mean of ``A``, the map reproduces the
pre-activation output as ``mean_t M_c(t) + b[c]``. The same construction applies to each of the
six regression outputs.

.. currentmodule:: skilleval.cam
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from skilleval.exc import IndexOutOfRange, InvalidConfig, IoError, LengthMismatch, TraceMismatch
from skilleval.kinematics.layout import ChannelLayout, default_channel_layout
from skilleval.kinematics.synth import MotifWindow
from skilleval.kinematics.trial import KinematicTrial
from skilleval.nn.model import FcnModel, HeadKind
from skilleval.nn.network import ForwardTrace
from skilleval.util import PathLike, format_decimal, write_json

logger = logging.getLogger("skilleval.cam")

#: The supported export formats.
EXPORT_FORMATS = ("csv", "json")

_AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class CamResult:
    """
    The activation map of one output neuron over one trial.
    """

    #: The output neuron, ``0..n_out - 1``.
    output_index: int

    #: The raw map ``M``, one value per timestamp.
    values: np.ndarray

    #: ``M`` min-max scaled into ``[0, 1]``; all zeros if ``M`` is constant.
    normalized: np.ndarray

    #: ``mean(M) + b[c]``, which equals the output's pre-activation value.
    z_check: float

    #: The name of the output (a skill level or an OSATS component).
    output_name: str = ""

    @property
    def length(self) -> int:
        return self.values.shape[0]


def normalize_cam(values: np.ndarray) -> np.ndarray:
    """
    Scales a map into ``[0, 1]`` with ``(M - min) / (max - min)``. A constant map becomes all
    zeros.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        return np.zeros_like(values)

    return (values - lo) / (hi - lo)


def compute_cam(model: FcnModel, trace: ForwardTrace, output_index: int) -> CamResult:
    """
    Computes the activation map of one output neuron.

    :param model: The model that produced the trace.
    :param trace: A forward trace of one trial.
    :param output_index: The output neuron.
    """
    if trace.head_kind is not model.head_kind:
        raise TraceMismatch(
            f"Trace is from a {trace.head_kind.value} head, "
            f"model has a {model.head_kind.value} head"
        )

    if trace.activations.shape[0] != model.head_w.shape[1] or trace.z.shape != (model.n_out,):
        raise TraceMismatch(
            f"Trace with {trace.activations.shape[0]} final maps and {trace.z.shape[0]} outputs "
            f"does not fit the model"
        )

    if isinstance(output_index, bool) or not 0 <= int(output_index) < model.n_out:
        raise IndexOutOfRange(output_index, model.n_out)

    c = int(output_index)
    values = model.head_w[c] @ trace.activations
    return CamResult(
        output_index=c,
        values=values,
        normalized=normalize_cam(values),
        z_check=float(values.mean() + model.head_b[c]),
        output_name=model.head_kind.output_names[c],
    )


def select_outputs(
    head_kind: HeadKind, selection: Union[str, Sequence[int]], trace: ForwardTrace = None
) -> List[int]:
    """
    Resolves an output selection into neuron indices.

    :param head_kind: The kind of head.
    :param selection: ``"all"``; ``"predicted"`` (the argmax class for classification, every
        output for regression); a comma separated list such as ``"1,5"``; or a list of indices.
        Repeated indices are dropped, keeping the first occurrence.
    :param trace: The forward trace, needed for ``"predicted"`` with a classification head.
    """
    n_out = head_kind.n_out
    if isinstance(selection, str):
        text = selection.strip().lower()
        if text == "all":
            return list(range(n_out))

        if text == "predicted":
            if head_kind is HeadKind.REGRESSION:
                return list(range(n_out))

            if trace is None:
                raise InvalidConfig("Selecting the predicted class needs a forward trace")

            return [int(np.argmax(trace.outputs))]

        try:
            indices = [int(part) for part in text.split(",") if part.strip()]
        except ValueError as e:
            raise InvalidConfig(f"Invalid output selection {selection!r}") from e
    else:
        indices = [int(i) for i in selection]

    if not indices:
        raise InvalidConfig("At least one output must be selected")

    indices = list(dict.fromkeys(indices))

    for index in indices:
        if not 0 <= index < n_out:
            raise IndexOutOfRange(index, n_out)

    return indices


def cam_localization_score(normalized: np.ndarray, window: MotifWindow) -> Tuple[float, float]:
    """
    Compares a normalized map inside and outside a known motif window.

    :return: A 2-tuple of (mean inside the window, mean outside it).
    """
    inside = window.mask(len(normalized))
    if inside.all() or not inside.any():
        raise LengthMismatch(int(inside.sum()), len(normalized))

    return float(normalized[inside].mean()), float(normalized[~inside].mean())


def _cartesian_columns(layout: ChannelLayout) -> List[Tuple[str, int]]:
    return [
        (f"{group}_{axis}", channel)
        for group, channels in layout.cartesian_channels().items()
        for axis, channel in zip(_AXES, channels)
    ]


def cam_table(
    trial: KinematicTrial,
    cam_results: Sequence[CamResult],
    layout: ChannelLayout = None,
) -> Tuple[List[str], List[List[float]]]:
    """
    Builds the export table: one row per timestamp.

    Columns are ``timestamp_index``, ``time_seconds``, a raw and a normalized column per map, and
    the Cartesian coordinates of every manipulator (from the unstandardized trial).

    :return: A 2-tuple of (header, rows).
    """
    layout = layout or default_channel_layout()
    for cam in cam_results:
        if cam.length != trial.length:
            raise LengthMismatch(cam.length, trial.length)

    cartesian = _cartesian_columns(layout)
    header = ["timestamp_index", "time_seconds"]
    for cam in cam_results:
        name = cam.output_name or str(cam.output_index)
        header.extend([f"{name}_raw", f"{name}_normalized"])

    header.extend(name for name, _ in cartesian)

    rows = []
    for t in range(trial.length):
        row = [t, t / trial.sample_rate_hz]
        for cam in cam_results:
            row.extend([float(cam.values[t]), float(cam.normalized[t])])

        row.extend(float(trial.samples[t, channel]) for _, channel in cartesian)
        rows.append(row)

    return header, rows


def export_cam(
    trial: KinematicTrial,
    cam_results: Sequence[CamResult],
    path: PathLike,
    format: str = "csv",
    layout: ChannelLayout = None,
) -> None:
    """
    Writes activation maps for external plotting.

    The CSV form has a header row and decimals at 17 significant digits. The JSON form holds the
    same data keyed by output name.

    :param trial: The trial the maps were computed on.
    :param cam_results: The maps to write.
    :param path: The output file.
    :param format: ``csv`` or ``json``.
    :param layout: The channel layout used to find the Cartesian channels.
    """
    if format not in EXPORT_FORMATS:
        raise InvalidConfig(f"Unknown export format {format!r}, expected one of {EXPORT_FORMATS}")

    indices = [cam.output_index for cam in cam_results]
    if len(set(indices)) != len(indices):
        raise InvalidConfig(f"Each output can be exported once, got {indices}")

    layout = layout or default_channel_layout()
    header, rows = cam_table(trial, cam_results, layout)

    if format == "json":
        write_json(path, _cam_document(trial, cam_results, layout))
    else:
        try:
            with open(path, "w", newline="", encoding="ascii") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow(
                        [str(row[0])] + [format_decimal(value) for value in row[1:]]
                    )
        except OSError as e:
            raise IoError(str(path), e.strerror or str(e)) from e

    logger.info("Wrote %d map(s) of %s to %s", len(cam_results), trial.trial_id, path)


def _cam_document(
    trial: KinematicTrial, cam_results: Sequence[CamResult], layout: ChannelLayout
) -> Dict[str, Any]:
    return {
        "trial_id": trial.trial_id,
        "sample_rate_hz": trial.sample_rate_hz,
        "length": trial.length,
        "time_seconds": (np.arange(trial.length) / trial.sample_rate_hz).tolist(),
        "outputs": {
            (cam.output_name or str(cam.output_index)): {
                "index": cam.output_index,
                "raw": cam.values.tolist(),
                "normalized": cam.normalized.tolist(),
                "z_check": cam.z_check,
            }
            for cam in cam_results
        },
        "cartesian": {
            name: trial.samples[:, channel].tolist() for name, channel in _cartesian_columns(layout)
        },
    }


def read_cam_csv(path: PathLike) -> Tuple[List[str], np.ndarray]:
    """
    Reads back a CSV written by :func:`export_cam`.

    :return: A 2-tuple of (header, ``l x columns`` matrix).
    """
    with open(Path(path), newline="", encoding="ascii") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(value) for value in row] for row in reader]

    return header, np.array(rows, dtype=np.float64)
