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
Label types: skill levels, OSATS scores and surgical tasks.

.. currentmodule:: skilleval.kinematics.skill
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence, Tuple

import numpy as np

from skilleval.exc import InvalidTrial


class SkillLevel(enum.IntEnum):
    """
    The self-proclaimed skill level of a trainee. The integer value is the output neuron index of a
    classification head.
    """

    #: Less than 10 hours of robotic surgery practice.
    NOVICE = 0

    #: Between 10 and 100 hours.
    INTERMEDIATE = 1

    #: More than 100 hours.
    EXPERT = 2

    @property
    def letter(self) -> str:
        """
        :return: The one-letter code used by the dataset (``N``, ``I`` or ``E``).
        """
        return self.name[0]

    @classmethod
    def parse(cls, value) -> "SkillLevel":
        """
        Parses a skill level from its letter, its name, or its integer value.

        :param value: ``"N"``, ``"novice"``, ``0``, ...
        """
        if isinstance(value, SkillLevel):
            return value

        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)

        text = str(value).strip().upper()
        for level in cls:
            if text in (level.letter, level.name):
                return level

        raise ValueError(f"Unknown skill level {value!r}")


class SurgicalTask(str, enum.Enum):
    """
    The three surgical tasks of the bench-top dataset.
    """

    SUTURING = "Suturing"
    NEEDLE_PASSING = "NeedlePassing"
    KNOT_TYING = "KnotTying"

    @classmethod
    def parse(cls, value) -> "SurgicalTask":
        """
        Parses a task name, ignoring case, underscores and dashes.
        """
        if isinstance(value, SurgicalTask):
            return value

        key = str(value).replace("_", "").replace("-", "").lower()
        for task in cls:
            if task.value.lower() == key:
                return task

        raise ValueError(f"Unknown surgical task {value!r}")


@dataclass(frozen=True)
class OsatsScores:
    """
    The six components of a modified OSATS annotation, in the order of the regression outputs.
    """

    respect_for_tissue: float
    suture_needle_handling: float
    time_and_motion: float
    flow_of_operation: float
    overall_performance: float
    quality_of_final_product: float

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise InvalidTrial(f"OSATS component {f.name} is not finite: {value!r}")

            object.__setattr__(self, f.name, value)

    @classmethod
    def component_names(cls) -> Tuple[str, ...]:
        """
        :return: The component names, in output-neuron order.
        """
        return OSATS_COMPONENTS

    @classmethod
    def from_sequence(cls, values: Iterable[float]) -> "OsatsScores":
        """
        Makes scores from six values in output-neuron order.
        """
        values = [float(v) for v in values]
        if len(values) != len(OSATS_COMPONENTS):
            raise InvalidTrial(f"Expected {len(OSATS_COMPONENTS)} OSATS values, got {len(values)}")

        return cls(*values)

    def as_array(self) -> np.ndarray:
        """
        :return: The six components as a float64 vector.
        """
        return np.array([getattr(self, name) for name in OSATS_COMPONENTS], dtype=np.float64)

    def total(self) -> float:
        """
        :return: The global rating score, i.e. the sum of the six components.
        """
        return float(sum(getattr(self, name) for name in OSATS_COMPONENTS))

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in OSATS_COMPONENTS}


OSATS_COMPONENTS: Tuple[str, ...] = tuple(f.name for f in fields(OsatsScores))


def skill_names() -> Sequence[str]:
    """
    :return: Lower-case skill names, in output-neuron order.
    """
    return [level.name.lower() for level in SkillLevel]
