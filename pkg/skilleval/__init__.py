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
skilleval - Surgical skill evaluation from robot kinematics with a grouped fully convolutional
network.

.. currentmodule:: skilleval

.. autosummary::
    :toctree:

    kinematics
    nn
    training
    evaluation
    cam
    commands

    exc
    util
"""
from __future__ import annotations

__version__ = "1.0.0"


from skilleval.cam import CamResult, compute_cam, export_cam
from skilleval.evaluation import EvalReport, run_experiment
from skilleval.kinematics import (
    ChannelLayout,
    DatasetManifest,
    KinematicTrial,
    OsatsScores,
    SkillLevel,
    SurgicalTask,
    default_channel_layout,
)
from skilleval.nn import FcnModel, HeadKind, backward, forward, init_model
from skilleval.training import TrainConfig, load_model, predict, save_model, train
