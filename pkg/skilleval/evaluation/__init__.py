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
Leave-one-super-trial-out evaluation and the skill assessment metrics.

.. currentmodule:: skilleval.evaluation

.. autosummary::
    :toctree: evaluation

    metrics
    folds
    experiment
"""
from skilleval.evaluation.experiment import EvalReport, run_experiment
from skilleval.evaluation.folds import FoldSpec, loso_folds
from skilleval.evaluation.metrics import (
    confusion_matrix,
    macro_precision,
    micro_accuracy,
    per_class_precision,
    regression_rho,
    spearman_rho,
)
