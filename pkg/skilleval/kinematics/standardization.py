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
Per-channel z-standardization, fitted on a training split.

.. currentmodule:: skilleval.kinematics.standardization
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from skilleval.exc import EmptyInput, InvalidConfig
from skilleval.kinematics.layout import N_CHANNELS
from skilleval.kinematics.trial import KinematicTrial

logger = logging.getLogger("skilleval.kinematics")

#: The floor applied to standard deviations; constant channels would divide by zero otherwise.
EPS_STD = 1e-8


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    """
    Per-channel means and standard deviations.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64)
        std = np.array(self.std, dtype=np.float64)
        if mean.shape != (N_CHANNELS,) or std.shape != (N_CHANNELS,):
            raise InvalidConfig(f"Standardization stats must have {N_CHANNELS} values each")

        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise InvalidConfig("Standardization stats must be finite")

        if np.any(std < EPS_STD):
            raise InvalidConfig(f"Standard deviations must be >= {EPS_STD}")

        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def identity(cls) -> "StandardizationStats":
        """
        :return: Stats with mean 0 and std 1, which leave samples unchanged.
        """
        return cls(mean=np.zeros(N_CHANNELS), std=np.ones(N_CHANNELS))

    def transform(self, samples: np.ndarray) -> np.ndarray:
        return (np.asarray(samples, dtype=np.float64) - self.mean) / self.std

    def inverse(self, samples: np.ndarray) -> np.ndarray:
        return np.asarray(samples, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StandardizationStats":
        return cls(mean=data["mean"], std=data["std"])


def fit_standardization(trials: Sequence[KinematicTrial]) -> StandardizationStats:
    """
    Computes per-channel mean and population standard deviation, pooled over every timestamp of
    every trial. Standard deviations are clamped below by :data:`EPS_STD`.

    :param trials: The training trials.
    """
    if not trials:
        raise EmptyInput("Cannot fit standardization on an empty trial list")

    pooled = np.concatenate([trial.samples for trial in trials], axis=0)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)

    constant = np.flatnonzero(std < EPS_STD)
    if constant.size:
        logger.warning("Clamping the std of %d constant channel(s): %s", constant.size, constant)

    return StandardizationStats(mean=mean, std=np.maximum(std, EPS_STD))


def apply_standardization(trial: KinematicTrial, stats: StandardizationStats) -> KinematicTrial:
    """
    Maps each channel to ``(x - mean) / std``. Labels and length are untouched.
    """
    return trial.with_samples(stats.transform(trial.samples))


def invert_standardization(trial: KinematicTrial, stats: StandardizationStats) -> KinematicTrial:
    """
    Undoes :func:`apply_standardization`.
    """
    return trial.with_samples(stats.inverse(trial.samples))
