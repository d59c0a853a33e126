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
Optimizing a network with Adam, and persisting the result.

.. currentmodule:: skilleval.training

.. autosummary::
    :toctree: training

    config
    optimizer
    trainer
    serialization
"""
from skilleval.training.config import TrainConfig
from skilleval.training.optimizer import AdamState, adam_step, adam_update
from skilleval.training.serialization import FORMAT_VERSION, load_model, save_model
from skilleval.training.trainer import (
    EpochRecord,
    Prediction,
    TrainHistory,
    predict,
    split_validation,
    train,
)
