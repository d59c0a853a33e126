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
Leave-one-super-trial-out cross-validation folds.

.. currentmodule:: skilleval.evaluation.folds
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.model_selection import LeaveOneGroupOut

from skilleval.exc import SingleSuperTrial
from skilleval.kinematics.trial import KinematicTrial


@dataclass(frozen=True)
class FoldSpec:
    """
    One fold: every trial with the held-out super trial index is tested, the rest train.
    """

    #: The 0-based position of this fold.
    index: int

    #: The super trial index held out.
    held_out_super_trial: int

    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]

    def split(
        self, trials: Sequence[KinematicTrial]
    ) -> Tuple[List[KinematicTrial], List[KinematicTrial]]:
        """
        :return: A 2-tuple of (train trials, test trials), in dataset order.
        """
        train = [t for t in trials if t.super_trial_index != self.held_out_super_trial]
        test = [t for t in trials if t.super_trial_index == self.held_out_super_trial]
        return train, test

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "held_out_super_trial": self.held_out_super_trial,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }


def loso_folds(dataset: Sequence[KinematicTrial]) -> List[FoldSpec]:
    """
    Makes one fold per distinct super trial index, in ascending index order. The super trial
    index is the group of a leave-one-group-out split.

    :param dataset: The trials.
    """
    trials = list(dataset)
    groups = np.array([t.super_trial_index for t in trials], dtype=np.int64)
    indices = np.unique(groups).tolist()
    if len(indices) < 2:
        raise SingleSuperTrial(
            f"LOSO needs at least 2 distinct super trials, got {len(indices)} ({indices})"
        )

    ids = np.array([t.trial_id for t in trials], dtype=object)
    splits = LeaveOneGroupOut().split(np.zeros((len(trials), 1)), groups=groups)
    folds = []
    for n, (train_index, test_index) in enumerate(splits):
        folds.append(
            FoldSpec(
                index=n,
                held_out_super_trial=int(groups[test_index[0]]),
                train_ids=tuple(ids[train_index]),
                test_ids=tuple(ids[test_index]),
            )
        )

    return folds
