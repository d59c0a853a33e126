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
Kinematic trials: parsing, dataset manifests, channel layout, standardization and synthesis.

.. currentmodule:: skilleval.kinematics

.. autosummary::
    :toctree: kinematics

    skill
    layout
    trial
    parsing
    manifest
    standardization
    synth
"""
from skilleval.kinematics.layout import (
    N_CHANNELS,
    ChannelGroup,
    ChannelLayout,
    ChannelLocation,
    default_channel_layout,
)
from skilleval.kinematics.manifest import (
    DatasetManifest,
    ManifestEntry,
    load_dataset,
    read_manifest,
    write_manifest,
)
from skilleval.kinematics.parsing import parse_kinematics, write_kinematics
from skilleval.kinematics.skill import OSATS_COMPONENTS, OsatsScores, SkillLevel, SurgicalTask
from skilleval.kinematics.standardization import (
    EPS_STD,
    StandardizationStats,
    apply_standardization,
    fit_standardization,
    invert_standardization,
)
from skilleval.kinematics.synth import MotifWindow, SynthConfig, SyntheticDataset, synth_dataset
from skilleval.kinematics.trial import KinematicTrial
