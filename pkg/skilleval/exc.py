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
Exceptions raised from within the library.

.. currentmodule:: skilleval.exc
"""
from typing import Any, Dict, Optional, Tuple


class SkillEvalError(Exception):
    """
    The base class for all skilleval exceptions.
    """


# Kinematics and dataset errors.
class InvalidTrial(SkillEvalError, ValueError):
    """
    Raised when a trial violates its invariants (channel count, length, finiteness, labels).
    """


class KinematicsError(SkillEvalError, ValueError):
    """
    The base class for errors raised while reading a kinematics file.
    """


class MalformedRow(KinematicsError):
    """
    Raised when a row of a kinematics file has the wrong number of columns or an unparsable value.

    :ivar path: The path of the offending file.
    :ivar line: The 1-based line number of the offending row.
    :ivar reason: A short description of what was wrong.
    """

    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason

    def __str__(self) -> str:
        return f"{self.path}, line {self.line}: {self.reason}"

    __repr__ = __str__


class EmptyFile(KinematicsError):
    """
    Raised when a kinematics file contains no samples.
    """

    def __init__(self, path: str):
        self.path = path

    def __str__(self) -> str:
        return f"{self.path} contains no samples"

    __repr__ = __str__


class ManifestError(SkillEvalError, ValueError):
    """
    Raised when a dataset manifest is malformed.
    """


class DuplicateTrial(ManifestError):
    """
    Raised when two manifest entries share a (subject, task, super trial) key.
    """

    def __init__(self, key: Tuple[str, str, int]):
        self.key = key

    def __str__(self) -> str:
        subject, task, super_trial = self.key
        return f"Duplicate trial: subject {subject}, task {task}, super trial {super_trial}"

    __repr__ = __str__


class DatasetEntryError(ManifestError):
    """
    Raised when loading a single manifest entry fails. The original error is the ``__cause__``.

    :ivar entry: The manifest entry that failed to load.
    """

    def __init__(self, entry: Any):
        self.entry = entry

    def __str__(self) -> str:
        return f"Failed to load {self.entry.kinematics_path}: {self.__cause__}"

    __repr__ = __str__


class InvalidLayout(SkillEvalError, ValueError):
    """
    Raised when a channel layout does not partition the kinematic channels correctly.
    """


class EmptyInput(SkillEvalError, ValueError):
    """
    Raised when an operation needs at least one item and got none.
    """


class InvalidConfig(SkillEvalError, ValueError):
    """
    Raised when a configuration value is out of range.
    """


# Network errors.
class ChannelMismatch(SkillEvalError, ValueError):
    """
    Raised when an input has a different number of channels than the parameters expect.
    """

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got

    def __str__(self) -> str:
        return f"Expected {self.expected} input channels, got {self.got}"

    __repr__ = __str__


class LengthTooShort(SkillEvalError, ValueError):
    """
    Raised when a series is shorter than the minimum length the network accepts.
    """

    def __init__(self, length: int, minimum: int):
        self.length = length
        self.minimum = minimum

    def __str__(self) -> str:
        return f"Series of length {self.length} is shorter than the minimum of {self.minimum}"

    __repr__ = __str__


class HeadMismatch(SkillEvalError, ValueError):
    """
    Raised when a target does not match the kind of output head of a model.
    """


class ShapeMismatch(SkillEvalError, ValueError):
    """
    Raised when gradient or optimizer tensors are not congruent with the model parameters.
    """


class TraceMismatch(SkillEvalError, ValueError):
    """
    Raised when a forward trace was not produced by the model it is used with.
    """


class IndexOutOfRange(SkillEvalError, IndexError):
    """
    Raised when an output neuron index is invalid for a model's head.
    """

    def __init__(self, index: int, n_out: int):
        self.index = index
        self.n_out = n_out

    def __str__(self) -> str:
        return f"Output index {self.index} is out of range for a head with {self.n_out} outputs"

    __repr__ = __str__


class GradientCheckFailed(SkillEvalError):
    """
    Raised when analytic gradients disagree with finite differences.
    """

    def __init__(self, failures: Dict[str, float], tolerance: float):
        #: The offending tensor names mapped to their max relative error.
        self.failures = failures
        self.tolerance = tolerance

    def __str__(self) -> str:
        worst = ", ".join(f"{name} ({err:.3e})" for name, err in self.failures.items())
        return f"Gradient check failed (tolerance {self.tolerance:g}): {worst}"

    __repr__ = __str__


# Training errors.
class TooFewTrials(SkillEvalError, ValueError):
    """
    Raised when there are not enough trials to split off a validation set.
    """


class LabelMismatch(SkillEvalError, ValueError):
    """
    Raised when trials lack the labels needed by the requested head.
    """


class EmptyDataset(SkillEvalError, ValueError):
    """
    Raised when training is requested on an empty dataset.
    """


class ModelFileError(SkillEvalError):
    """
    The base class for errors raised while loading a saved model.
    """


class VersionMismatch(ModelFileError):
    """
    Raised when a model file has an unsupported format version.
    """

    def __init__(self, found: Any, supported: int):
        self.found = found
        self.supported = supported

    def __str__(self) -> str:
        return f"Model file has format version {self.found!r}, expected {self.supported}"

    __repr__ = __str__


class CorruptModel(ModelFileError):
    """
    Raised when a model file is truncated or its arrays have the wrong shape.
    """


# Evaluation errors.
class LengthMismatch(SkillEvalError, ValueError):
    """
    Raised when two sequences that must be aligned have different lengths.
    """

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right

    def __str__(self) -> str:
        return f"Length mismatch: {self.left} != {self.right}"

    __repr__ = __str__


class TooShort(SkillEvalError, ValueError):
    """
    Raised when a sequence is too short for a statistic to be defined.
    """


class SingleSuperTrial(SkillEvalError, ValueError):
    """
    Raised when a dataset has fewer than two distinct super trials, so no LOSO fold exists.
    """


class ExperimentRunError(SkillEvalError):
    """
    Raised when a single (repeat, fold) run of an experiment fails. The original error is the
    ``__cause__``.
    """

    def __init__(self, repeat: int, fold: int, super_trial: Optional[int] = None):
        self.repeat = repeat
        self.fold = fold
        self.super_trial = super_trial

    def __str__(self) -> str:
        return (
            f"Run failed in repeat {self.repeat}, fold {self.fold} "
            f"(super trial {self.super_trial}): {self.__cause__}"
        )

    __repr__ = __str__


class IoError(SkillEvalError, OSError):
    """
    Raised when a file cannot be read or written.
    """

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason

    def __str__(self) -> str:
        return f"Cannot access {self.path}: {self.reason}"

    __repr__ = __str__
