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
Skill assessment metrics: micro accuracy, macro precision and Spearman's rank correlation.

.. currentmodule:: skilleval.evaluation.metrics
"""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn import metrics

from skilleval.exc import EmptyInput, LengthMismatch, TooShort
from skilleval.kinematics.skill import OSATS_COMPONENTS, OsatsScores, SkillLevel

#: The output index of every class, in class order.
LABELS: List[int] = [int(level) for level in SkillLevel]


def _check_pair(predictions: Sequence, truths: Sequence) -> None:
    if len(predictions) != len(truths):
        raise LengthMismatch(len(predictions), len(truths))

    if not predictions:
        raise EmptyInput("Metrics need at least one prediction")


def _labels(levels: Sequence[SkillLevel]) -> List[int]:
    return [int(level) for level in levels]


def micro_accuracy(predictions: Sequence[SkillLevel], truths: Sequence[SkillLevel]) -> float:
    """
    :return: The fraction of predictions equal to their truth.
    """
    _check_pair(predictions, truths)
    return float(metrics.accuracy_score(_labels(truths), _labels(predictions)))


def confusion_matrix(
    predictions: Sequence[SkillLevel], truths: Sequence[SkillLevel]
) -> np.ndarray:
    """
    :return: A ``3 x 3`` count matrix; rows are true classes, columns predicted classes.
    """
    _check_pair(predictions, truths)
    matrix = metrics.confusion_matrix(_labels(truths), _labels(predictions), labels=LABELS)
    return matrix.astype(np.int64)


def per_class_precision(
    predictions: Sequence[SkillLevel], truths: Sequence[SkillLevel]
) -> Dict[SkillLevel, Optional[float]]:
    """
    Computes ``TP / (TP + FP)`` for every class.

    A class that is neither predicted nor present in the truths maps to None. A class that is
    present but never predicted has precision 0.
    """
    _check_pair(predictions, truths)
    y_true, y_pred = _labels(truths), _labels(predictions)
    scores = metrics.precision_score(y_true, y_pred, labels=LABELS, average=None, zero_division=0)
    involved = set(y_true) | set(y_pred)
    return {
        level: float(scores[int(level)]) if int(level) in involved else None
        for level in SkillLevel
    }


def macro_precision(predictions: Sequence[SkillLevel], truths: Sequence[SkillLevel]) -> float:
    """
    :return: The unweighted mean of :func:`per_class_precision`, skipping absent classes.
    """
    values = [p for p in per_class_precision(predictions, truths).values() if p is not None]
    return float(np.mean(values))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Computes Spearman's rank correlation: the Pearson correlation of the ranks of ``x`` and
    ``y``, where tied values share the mean of their rank range.

    If either input is constant the correlation is undefined; 0 is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(x.size, y.size)

    if x.size < 2:
        raise TooShort(f"Spearman's rho needs at least 2 pairs, got {x.size}")

    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0

    rho = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(rho, -1.0, 1.0))


def regression_rho(
    predictions: Sequence[OsatsScores], truths: Sequence[OsatsScores]
) -> Dict[str, object]:
    """
    Computes Spearman's rho for each OSATS component, in component order.

    :return: ``{"per_component": {name: rho}, "mean": mean of the six}``.
    """
    _check_pair(predictions, truths)
    pred = np.array([p.as_array() for p in predictions])
    true = np.array([t.as_array() for t in truths])

    per_component: List[float] = [
        spearman_rho(pred[:, k], true[:, k]) for k in range(len(OSATS_COMPONENTS))
    ]
    return {
        "per_component": dict(zip(OSATS_COMPONENTS, per_component)),
        "mean": float(np.mean(per_component)),
    }
