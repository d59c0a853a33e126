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
Dataset manifests: a JSON document listing trials, their kinematics files and their labels.

.. code-block:: json

    {
      "layout": null,
      "trials": [
        {"task": "Suturing", "subject_id": "B", "super_trial_index": 1,
         "kinematics_path": "kinematics/Suturing_B001.txt", "skill": "N",
         "osats": {"respect_for_tissue": 2, "...": "..."}}
      ]
    }

Relative kinematics paths are resolved against the directory holding the manifest.

.. currentmodule:: skilleval.kinematics.manifest
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from skilleval.exc import (
    DatasetEntryError,
    DuplicateTrial,
    IoError,
    KinematicsError,
    ManifestError,
)
from skilleval.kinematics.layout import ChannelLayout, default_channel_layout
from skilleval.kinematics.parsing import parse_kinematics
from skilleval.kinematics.skill import OSATS_COMPONENTS, OsatsScores, SkillLevel, SurgicalTask
from skilleval.kinematics.trial import KinematicTrial
from skilleval.util import PathLike, write_json

logger = logging.getLogger("skilleval.kinematics")

_TOP_LEVEL_FIELDS = {"layout", "trials"}
_ENTRY_FIELDS = {"task", "subject_id", "super_trial_index", "kinematics_path", "skill", "osats"}
_REQUIRED_ENTRY_FIELDS = {"task", "subject_id", "super_trial_index", "kinematics_path"}


def make_trial_id(task: SurgicalTask, subject_id: str, super_trial_index: int) -> str:
    """
    Makes a trial id in the dataset's naming convention, e.g. ``Suturing_B001``.
    """
    return f"{task.value}_{subject_id}{super_trial_index:03d}"


@dataclass(frozen=True)
class ManifestEntry:
    """
    One trial listed in a manifest.
    """

    task: SurgicalTask
    subject_id: str
    super_trial_index: int
    kinematics_path: Path
    skill: Optional[SkillLevel] = None
    osats: Optional[OsatsScores] = None

    @property
    def key(self) -> Tuple[str, str, int]:
        """
        :return: The (subject, task, super trial) triple that must be unique in a manifest.
        """
        return self.subject_id, self.task.value, self.super_trial_index

    @property
    def trial_id(self) -> str:
        return make_trial_id(self.task, self.subject_id, self.super_trial_index)

    def to_dict(self, base_dir: Optional[Path] = None) -> Dict[str, Any]:
        path = self.kinematics_path
        if base_dir is not None:
            try:
                path = path.relative_to(base_dir)
            except ValueError:
                pass

        data: Dict[str, Any] = {
            "task": self.task.value,
            "subject_id": self.subject_id,
            "super_trial_index": self.super_trial_index,
            "kinematics_path": path.as_posix(),
        }
        if self.skill is not None:
            data["skill"] = self.skill.letter

        if self.osats is not None:
            data["osats"] = self.osats.to_dict()

        return data


@dataclass(frozen=True)
class DatasetManifest:
    """
    A list of manifest entries plus an optional channel layout override.
    """

    #: The trials in this manifest.
    entries: Tuple[ManifestEntry, ...] = ()

    #: The layout override, or None for the default layout.
    layout: Optional[ChannelLayout] = None

    #: The directory relative kinematics paths were resolved against.
    base_dir: Path = field(default_factory=Path)

    def effective_layout(self) -> ChannelLayout:
        """
        :return: The layout override, or the default layout when none was given.
        """
        return self.layout if self.layout is not None else default_channel_layout()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layout": self.layout.to_dict() if self.layout is not None else None,
            "trials": [entry.to_dict(self.base_dir) for entry in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Any, base_dir: PathLike = ".") -> "DatasetManifest":
        """
        Validates and reads the JSON form of a manifest. Unknown fields are rejected.

        :param data: The decoded JSON document.
        :param base_dir: The directory relative paths are resolved against.
        """
        base_dir = Path(base_dir)
        if not isinstance(data, dict):
            raise ManifestError("Manifest must be a JSON object")

        unknown = set(data) - _TOP_LEVEL_FIELDS
        if unknown:
            raise ManifestError(f"Unknown manifest fields: {sorted(unknown)}")

        layout = None
        if data.get("layout") is not None:
            layout = ChannelLayout.from_dict(data["layout"])

        trials = data.get("trials", [])
        if not isinstance(trials, list):
            raise ManifestError("'trials' must be a list")

        entries = tuple(_parse_entry(n, raw, base_dir) for n, raw in enumerate(trials))
        return cls(entries=entries, layout=layout, base_dir=base_dir)


def _parse_entry(n: int, raw: Any, base_dir: Path) -> ManifestEntry:
    """
    Parses the ``n``-th entry of a manifest.
    """
    if not isinstance(raw, dict):
        raise ManifestError(f"Trial entry {n} must be a JSON object")

    unknown = set(raw) - _ENTRY_FIELDS
    if unknown:
        raise ManifestError(f"Trial entry {n} has unknown fields: {sorted(unknown)}")

    missing = _REQUIRED_ENTRY_FIELDS - set(raw)
    if missing:
        raise ManifestError(f"Trial entry {n} is missing fields: {sorted(missing)}")

    try:
        task = SurgicalTask.parse(raw["task"])
        super_trial = int(raw["super_trial_index"])
        skill = SkillLevel.parse(raw["skill"]) if raw.get("skill") is not None else None
        osats = _parse_osats(raw["osats"]) if raw.get("osats") is not None else None
    except (TypeError, ValueError) as e:
        raise ManifestError(f"Trial entry {n}: {e}") from e

    if super_trial < 1:
        raise ManifestError(f"Trial entry {n}: super_trial_index must be >= 1")

    if skill is None and osats is None:
        raise ManifestError(f"Trial entry {n} has neither a skill level nor OSATS scores")

    path = Path(raw["kinematics_path"])
    if not path.is_absolute():
        path = base_dir / path

    return ManifestEntry(
        task=task,
        subject_id=str(raw["subject_id"]),
        super_trial_index=super_trial,
        kinematics_path=path,
        skill=skill,
        osats=osats,
    )


def _parse_osats(raw: Any) -> OsatsScores:
    if isinstance(raw, dict):
        unknown = set(raw) - set(OSATS_COMPONENTS)
        if unknown:
            raise ValueError(f"unknown OSATS components {sorted(unknown)}")

        return OsatsScores(**{name: float(raw[name]) for name in OSATS_COMPONENTS})

    return OsatsScores.from_sequence(raw)


def read_manifest(path: PathLike) -> DatasetManifest:
    """
    Reads a manifest file. Relative kinematics paths are resolved against its directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path} is not valid JSON: {e}") from e

    return DatasetManifest.from_dict(data, base_dir=path.parent)


def write_manifest(path: PathLike, manifest: DatasetManifest) -> None:
    """
    Writes a manifest file, with kinematics paths relative to the manifest's base directory.
    """
    write_json(path, manifest.to_dict())


def load_dataset(manifest: DatasetManifest) -> List[KinematicTrial]:
    """
    Loads every trial of a manifest.

    :param manifest: The manifest to load.
    :return: One :class:`.KinematicTrial` per entry, in manifest order.
    """
    seen = set()
    for entry in manifest.entries:
        if entry.key in seen:
            raise DuplicateTrial(entry.key)

        seen.add(entry.key)

    trials = []
    for entry in manifest.entries:
        try:
            samples = parse_kinematics(entry.kinematics_path)
            trial = KinematicTrial(
                trial_id=entry.trial_id,
                subject_id=entry.subject_id,
                task=entry.task,
                super_trial_index=entry.super_trial_index,
                samples=samples,
                skill=entry.skill,
                osats=entry.osats,
            )
        except (KinematicsError, OSError, ValueError) as e:
            raise DatasetEntryError(entry) from e

        trials.append(trial)

    logger.info("Loaded %d trials", len(trials))
    return trials
