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
Synthetic labelled trials, for exercising the whole pipeline without the real dataset.

Each trial is Gaussian noise with a class-specific sinusoidal motif injected into a random window
on the Cartesian channels of one manipulator (master left for novices, master right for
intermediates, slave left for experts). The motif amplitude is jittered per trial and the OSATS
targets are a deterministic function of the class and that amplitude.

.. currentmodule:: skilleval.kinematics.synth
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from skilleval.exc import InvalidConfig
from skilleval.kinematics.layout import N_CHANNELS, default_channel_layout
from skilleval.kinematics.manifest import (
    DatasetManifest,
    ManifestEntry,
    make_trial_id,
    write_manifest,
)
from skilleval.kinematics.parsing import write_kinematics
from skilleval.kinematics.skill import OSATS_COMPONENTS, OsatsScores, SkillLevel, SurgicalTask
from skilleval.kinematics.trial import KinematicTrial
from skilleval.util import PathLike, make_rng, write_json

logger = logging.getLogger("skilleval.kinematics")

#: The bounds any generated length must stay within.
LENGTH_BOUNDS = (30, 2000)

#: The manipulator whose Cartesian channels carry each class's motif.
_MOTIF_GROUPS = {SkillLevel.NOVICE: "ML", SkillLevel.INTERMEDIATE: "MR", SkillLevel.EXPERT: "SL"}

#: Motif cycles per window, by class.
_MOTIF_CYCLES = {SkillLevel.NOVICE: 1.0, SkillLevel.INTERMEDIATE: 2.0, SkillLevel.EXPERT: 3.0}


@dataclass(frozen=True)
class SynthConfig:
    """
    Configuration for :func:`synth_dataset`.
    """

    #: The number of trials generated per skill level (and per task).
    n_per_class: int = 10

    #: Inclusive bounds on the trial length.
    length_range: Tuple[int, int] = (60, 120)

    #: The nominal motif amplitude, in units of the noise standard deviation.
    motif_amplitude: float = 3.0

    #: The number of super trials each subject performs.
    super_trials: int = 5

    #: The standard deviation of the background noise.
    noise_std: float = 1.0

    #: The tasks to generate trials for.
    tasks: Tuple[SurgicalTask, ...] = (SurgicalTask.SUTURING,)

    def __post_init__(self):
        if int(self.n_per_class) < 1:
            raise InvalidConfig("n_per_class must be at least 1")

        lo, hi = (int(v) for v in self.length_range)
        if not (LENGTH_BOUNDS[0] <= lo <= hi <= LENGTH_BOUNDS[1]):
            raise InvalidConfig(f"length_range {self.length_range} must lie within {LENGTH_BOUNDS}")

        if not self.motif_amplitude >= 0:
            raise InvalidConfig("motif_amplitude must be non-negative")

        if int(self.super_trials) < 1:
            raise InvalidConfig("super_trials must be at least 1")

        if not self.noise_std > 0:
            raise InvalidConfig("noise_std must be positive")

        if not self.tasks:
            raise InvalidConfig("At least one task is required")

        object.__setattr__(self, "length_range", (lo, hi))
        object.__setattr__(self, "tasks", tuple(SurgicalTask.parse(t) for t in self.tasks))


@dataclass(frozen=True)
class MotifWindow:
    """
    Where a motif was injected into a synthetic trial. ``stop`` is exclusive.
    """

    trial_id: str
    start: int
    stop: int
    channels: Tuple[int, ...]
    amplitude: float

    def mask(self, length: int) -> np.ndarray:
        """
        :return: A boolean vector of the given length, True inside the window.
        """
        inside = np.zeros(length, dtype=bool)
        inside[self.start : self.stop] = True
        return inside

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "start": self.start,
            "stop": self.stop,
            "channels": list(self.channels),
            "amplitude": self.amplitude,
        }


@dataclass
class SyntheticDataset:
    """
    The generated trials plus the motif window of each, keyed by trial id. Iterating yields the
    trials.
    """

    trials: List[KinematicTrial] = field(default_factory=list)
    windows: Dict[str, MotifWindow] = field(default_factory=dict)

    def __iter__(self) -> Iterator[KinematicTrial]:
        return iter(self.trials)

    def __len__(self) -> int:
        return len(self.trials)

    def __getitem__(self, item):
        return self.trials[item]


def synthetic_osats(skill: SkillLevel, amplitude_ratio: float) -> OsatsScores:
    """
    The OSATS targets of a synthetic trial: a per-class base level shifted by the trial's motif
    amplitude ratio (1.0 is nominal), with a small per-component offset.
    """
    values = [
        1.0 + 1.5 * int(skill) + 2.0 * (amplitude_ratio - 1.0) + 0.1 * k
        for k in range(len(OSATS_COMPONENTS))
    ]
    return OsatsScores.from_sequence(values)


def _make_trial(
    rng: np.random.Generator, config: SynthConfig, task: SurgicalTask, skill: SkillLevel, n: int
) -> Tuple[KinematicTrial, MotifWindow]:
    lo, hi = config.length_range
    length = int(rng.integers(lo, hi + 1))
    samples = rng.standard_normal((length, N_CHANNELS)) * config.noise_std

    width = max(10, length // 3)
    start = int(rng.integers(0, length - width + 1))
    ratio = float(rng.uniform(0.75, 1.25))
    amplitude = config.motif_amplitude * ratio

    channels = default_channel_layout().cartesian_channels()[_MOTIF_GROUPS[skill]]
    phase = 2.0 * np.pi * _MOTIF_CYCLES[skill] * np.arange(width) / width
    for j, channel in enumerate(channels):
        samples[start : start + width, channel] += amplitude * np.sin(phase + j * np.pi / 3.0)

    subject_id = f"{skill.letter}{n // config.super_trials + 1:02d}"
    super_trial = n % config.super_trials + 1
    trial_id = make_trial_id(task, subject_id, super_trial)
    trial = KinematicTrial(
        trial_id=trial_id,
        subject_id=subject_id,
        task=task,
        super_trial_index=super_trial,
        samples=samples,
        skill=skill,
        osats=synthetic_osats(skill, ratio),
    )
    window = MotifWindow(trial_id, start, start + width, tuple(channels), amplitude)
    return trial, window


def synth_dataset(seed: int, config: SynthConfig = None) -> SyntheticDataset:
    """
    Generates a labelled synthetic dataset. The result is a pure function of ``(seed, config)``.

    :param seed: The master seed.
    :param config: The generator configuration, or None for the defaults.
    """
    if config is None:
        config = SynthConfig()

    dataset = SyntheticDataset()
    for t, task in enumerate(config.tasks):
        for skill in SkillLevel:
            for n in range(config.n_per_class):
                rng = make_rng(seed, t, int(skill), n)
                trial, window = _make_trial(rng, config, task, skill, n)
                dataset.trials.append(trial)
                dataset.windows[trial.trial_id] = window

    logger.info("Generated %d synthetic trials (seed %d)", len(dataset), seed)
    return dataset


def write_synthetic_dataset(dataset: SyntheticDataset, out_dir: PathLike) -> Path:
    """
    Writes a synthetic dataset as kinematics files, a manifest and a motif-window file.

    :param dataset: The dataset to write.
    :param out_dir: The output directory; created if missing.
    :return: The path of the manifest.
    """
    out_dir = Path(out_dir)
    kin_dir = out_dir / "kinematics"
    kin_dir.mkdir(parents=True, exist_ok=True)

    entries: List[ManifestEntry] = []
    for trial in dataset.trials:
        path = kin_dir / f"{trial.trial_id}.txt"
        write_kinematics(path, trial.samples)
        entries.append(
            ManifestEntry(
                task=trial.task,
                subject_id=trial.subject_id,
                super_trial_index=trial.super_trial_index,
                kinematics_path=path,
                skill=trial.skill,
                osats=trial.osats,
            )
        )

    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, DatasetManifest(entries=tuple(entries), base_dir=out_dir))
    write_json(
        out_dir / "motifs.json",
        {"windows": [dataset.windows[t.trial_id].to_dict() for t in dataset.trials]},
    )
    return manifest_path


def trials_by_skill(trials: Sequence[KinematicTrial]) -> Dict[SkillLevel, int]:
    """
    :return: A count of trials per skill level.
    """
    counts = {level: 0 for level in SkillLevel}
    for trial in trials:
        if trial.skill is not None:
            counts[trial.skill] += 1

    return counts
