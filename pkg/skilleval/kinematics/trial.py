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
Wrappers for a single recorded trial.

.. currentmodule:: skilleval.kinematics.trial
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from skilleval.exc import InvalidTrial
from skilleval.kinematics.layout import N_CHANNELS
from skilleval.kinematics.skill import OsatsScores, SkillLevel, SurgicalTask

#: The shortest series a kernel-3 convolution stack accepts.
MIN_LENGTH = 3

#: The recording frequency of the dataset.
DEFAULT_SAMPLE_RATE_HZ = 30.0


@dataclass(frozen=True, eq=False)
class KinematicTrial:
    """
    Represents one surgical trial: an ``l x 76`` series of kinematic samples plus its labels.

    The sample matrix is stored as a read-only float64 array, so trials can be shared freely.
    """

    #: The trial identifier, e.g. ``Suturing_B001``.
    trial_id: str

    #: The subject (trainee) identifier.
    subject_id: str

    #: The surgical task performed.
    task: SurgicalTask

    #: The repetition number of this subject's performance, starting at 1.
    super_trial_index: int

    #: The samples, one row per timestamp and one column per channel.
    samples: np.ndarray

    #: The sampling frequency in Hz.
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    #: The self-proclaimed skill level, if known.
    skill: Optional[SkillLevel] = None

    #: The OSATS annotation, if known.
    osats: Optional[OsatsScores] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != N_CHANNELS:
            raise InvalidTrial(
                f"Trial {self.trial_id}: expected an l x {N_CHANNELS} matrix, got {samples.shape}"
            )

        if samples.shape[0] < MIN_LENGTH:
            raise InvalidTrial(
                f"Trial {self.trial_id}: length {samples.shape[0]} is below {MIN_LENGTH}"
            )

        if not np.all(np.isfinite(samples)):
            raise InvalidTrial(f"Trial {self.trial_id}: samples contain non-finite values")

        if int(self.super_trial_index) < 1:
            raise InvalidTrial(f"Trial {self.trial_id}: super trial index must be >= 1")

        if not self.sample_rate_hz > 0:
            raise InvalidTrial(f"Trial {self.trial_id}: sample rate must be positive")

        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "task", SurgicalTask.parse(self.task))
        object.__setattr__(self, "super_trial_index", int(self.super_trial_index))
        if self.skill is not None:
            object.__setattr__(self, "skill", SkillLevel.parse(self.skill))

    def __repr__(self) -> str:
        return (
            f"<KinematicTrial id={self.trial_id!r} length={self.length} "
            f"skill={self.skill!r} osats={self.osats is not None}>"
        )

    @property
    def length(self) -> int:
        """
        :return: The number of timestamps ``l``.
        """
        return self.samples.shape[0]

    @property
    def is_labeled(self) -> bool:
        """
        :return: If this trial has a skill level or an OSATS annotation.
        """
        return self.skill is not None or self.osats is not None

    def with_samples(self, samples: np.ndarray) -> "KinematicTrial":
        """
        :return: A copy of this trial with the samples replaced and the labels untouched.
        """
        return dataclasses.replace(self, samples=samples)
