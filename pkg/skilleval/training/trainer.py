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
The training loop: per-trial Adam updates with best-validation-loss checkpointing.

.. currentmodule:: skilleval.training.trainer
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from skilleval.exc import EmptyDataset, InvalidConfig, LabelMismatch, TooFewTrials
from skilleval.kinematics.layout import ChannelLayout
from skilleval.kinematics.skill import OsatsScores, SkillLevel
from skilleval.kinematics.standardization import StandardizationStats, fit_standardization
from skilleval.kinematics.trial import KinematicTrial
from skilleval.nn.model import FcnModel, HeadKind, init_model
from skilleval.nn.network import Target, backward, data_loss, forward
from skilleval.training.config import TrainConfig
from skilleval.training.optimizer import AdamState, adam_step
from skilleval.util import make_rng

logger = logging.getLogger("skilleval.training")


@dataclass(frozen=True)
class EpochRecord:
    """
    The losses of one epoch. Both are pure data losses (no L2 term).
    """

    #: The 1-based epoch number.
    epoch: int

    #: The mean per-trial loss seen during the epoch's updates.
    train_loss: float

    #: The mean loss over the validation split after the epoch.
    validation_loss: float


@dataclass
class TrainHistory:
    """
    The bookkeeping of one training run.
    """

    head_kind: HeadKind
    config: TrainConfig

    #: One record per completed epoch.
    records: List[EpochRecord] = field(default_factory=list)

    #: The 1-based epoch whose parameters were returned.
    best_epoch: int = 0

    #: The validation loss of the returned parameters.
    best_validation_loss: float = math.inf

    #: The validation loss of the freshly initialized model.
    initial_validation_loss: float = math.inf

    train_ids: Tuple[str, ...] = ()
    validation_ids: Tuple[str, ...] = ()

    #: If training ended before ``max_epochs`` because of early stopping.
    stopped_early: bool = False

    @property
    def validation_losses(self) -> List[float]:
        return [r.validation_loss for r in self.records]

    @property
    def train_losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "head": self.head_kind.value,
            "config": self.config.to_dict(),
            "best_epoch": self.best_epoch,
            "best_validation_loss": self.best_validation_loss,
            "initial_validation_loss": self.initial_validation_loss,
            "stopped_early": self.stopped_early,
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
            "epochs": [
                {"epoch": r.epoch, "train_loss": r.train_loss, "validation_loss": r.validation_loss}
                for r in self.records
            ],
        }


def target_of(trial: KinematicTrial, head_kind: HeadKind) -> Target:
    """
    :return: The training target of a trial for the given head.
    """
    if head_kind is HeadKind.CLASSIFICATION:
        if trial.skill is None:
            raise LabelMismatch(f"Trial {trial.trial_id} has no skill level")

        return trial.skill

    if trial.osats is None:
        raise LabelMismatch(f"Trial {trial.trial_id} has no OSATS scores")

    return trial.osats.as_array()


def check_labels(trials: Iterable[KinematicTrial], head_kind: HeadKind) -> None:
    """
    Raises :class:`.LabelMismatch` listing every trial that lacks the labels ``head_kind`` needs.
    """
    attr = "skill" if head_kind is HeadKind.CLASSIFICATION else "osats"
    missing = [t.trial_id for t in trials if getattr(t, attr) is None]
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise LabelMismatch(
            f"{len(missing)} trial(s) lack the {attr} label a {head_kind.value} head needs: {shown}"
        )


def validation_size(n: int, fraction: float) -> int:
    """
    :return: ``max(1, round(fraction * n))`` (halves round up), capped at ``n - 1``.
    """
    return min(max(1, int(math.floor(fraction * n + 0.5))), n - 1)


def _stratified_quotas(counts: Dict[SkillLevel, int], n_val: int) -> Dict[SkillLevel, int]:
    # largest remainder over the classes that can spare a member
    eligible = [c for c in sorted(counts) if counts[c] >= 2]
    total = sum(counts[c] for c in eligible)
    if not eligible:
        return {}

    exact = {c: n_val * counts[c] / total for c in eligible}
    quotas = {c: min(int(math.floor(exact[c])), counts[c] - 1) for c in eligible}

    if n_val >= len(eligible):
        for c in eligible:
            quotas[c] = max(quotas[c], 1)

    while sum(quotas.values()) > n_val:
        largest = max(eligible, key=lambda c: (quotas[c], -int(c)))
        quotas[largest] -= 1

    by_remainder = sorted(eligible, key=lambda c: (-(exact[c] - math.floor(exact[c])), int(c)))
    while sum(quotas.values()) < n_val:
        open_classes = [c for c in by_remainder if quotas[c] < counts[c] - 1]
        if not open_classes:
            break

        for c in open_classes:
            if sum(quotas.values()) >= n_val:
                break

            quotas[c] += 1

    return quotas


def split_validation(
    trials: Sequence[KinematicTrial],
    fraction: float,
    rng: np.random.Generator,
    stratify: bool = True,
) -> Tuple[List[KinematicTrial], List[KinematicTrial]]:
    """
    Splits trials into a training and a validation set.

    The validation set has ``max(1, round(fraction * n))`` trials. When every trial has a skill
    level and ``stratify`` is set, the validation slots are shared among the classes by largest
    remainder; every class with at least two members contributes (slots permitting) and every
    class keeps at least one member in the training set, so the validation set comes out smaller
    than requested when the classes cannot spare enough members.

    Both returned lists keep the input order.

    :param trials: The trials to split.
    :param fraction: The validation share, in ``(0, 1)``.
    :param rng: The generator used to pick validation members.
    :param stratify: If the split is stratified by skill level.
    :return: A 2-tuple of (train, validation).
    """
    n = len(trials)
    if n < 2:
        raise TooFewTrials(f"Need at least 2 trials to split off a validation set, got {n}")

    if not 0 < fraction < 1:
        raise InvalidConfig(f"fraction must lie in (0, 1), got {fraction}")

    n_val = validation_size(n, fraction)
    chosen: List[int] = []

    if stratify and all(t.skill is not None for t in trials):
        members: Dict[SkillLevel, List[int]] = {}
        for i, trial in enumerate(trials):
            members.setdefault(trial.skill, []).append(i)

        quotas = _stratified_quotas({c: len(m) for c, m in members.items()}, n_val)
        for c in sorted(members):
            picked = rng.permutation(members[c])[: quotas.get(c, 0)]
            chosen.extend(int(i) for i in picked)

        if len(chosen) < n_val:
            # one member of every class stays behind for training
            taken = set(chosen)
            spare: List[int] = []
            for c in sorted(members):
                spare.extend([i for i in members[c] if i not in taken][1:])

            chosen.extend(int(i) for i in rng.permutation(spare)[: n_val - len(chosen)])
    else:
        chosen = [int(i) for i in rng.permutation(n)[:n_val]]

    val_set = set(chosen)
    train_split = [t for i, t in enumerate(trials) if i not in val_set]
    val_split = [t for i, t in enumerate(trials) if i in val_set]
    return train_split, val_split


def mean_loss(
    model: FcnModel, inputs: Sequence[np.ndarray], targets: Sequence[Target]
) -> float:
    """
    :return: The mean data loss of a model over (already standardized) inputs.
    """
    losses = [data_loss(forward(model, x), y) for x, y in zip(inputs, targets)]
    return float(np.mean(losses))


def train(
    dataset: Iterable[KinematicTrial],
    head_kind: HeadKind,
    config: Optional[TrainConfig] = None,
    layout: Optional[ChannelLayout] = None,
) -> Tuple[FcnModel, TrainHistory, StandardizationStats]:
    """
    Trains a fresh model.

    The run is a pure function of its arguments. Three child generators are derived from
    ``config.seed``: one for the validation split, one for the initial weights and one for the
    per-epoch shuffles.

    :param dataset: The labelled trials.
    :param head_kind: The kind of head to train.
    :param config: The hyperparameters, or None for the defaults.
    :param layout: The channel layout, or None for the default layout.
    :return: A 3-tuple of (model with the lowest validation loss, history, standardization).
    """
    if config is None:
        config = TrainConfig()

    trials = list(dataset)
    if not trials:
        raise EmptyDataset("Cannot train on an empty dataset")

    check_labels(trials, head_kind)

    split_rng = make_rng(config.seed, 0)
    init_rng = make_rng(config.seed, 1)
    shuffle_rng = make_rng(config.seed, 2)

    if config.validation_fraction > 0:
        train_split, val_split = split_validation(
            trials, config.validation_fraction, split_rng, stratify=config.stratify
        )
        if not val_split:
            logger.warning("No class can spare a validation trial, validating on the training set")
            val_split = train_split
    else:
        train_split, val_split = trials, trials

    if config.standardize:
        stats = fit_standardization(train_split)
    else:
        stats = StandardizationStats.identity()

    train_x = [stats.transform(t.samples) for t in train_split]
    train_y = [target_of(t, head_kind) for t in train_split]
    val_x = [stats.transform(t.samples) for t in val_split]
    val_y = [target_of(t, head_kind) for t in val_split]

    if head_kind is HeadKind.CLASSIFICATION:
        missing = {t.skill for t in train_split} - {t.skill for t in val_split}
        if missing and val_split is not train_split:
            logger.warning(
                "Validation split lacks class(es) %s", ", ".join(c.name for c in sorted(missing))
            )

    model = init_model(head_kind, init_rng, layout)
    state = AdamState.for_model(model)

    history = TrainHistory(
        head_kind=head_kind,
        config=config,
        train_ids=tuple(t.trial_id for t in train_split),
        validation_ids=tuple(t.trial_id for t in val_split),
    )
    history.initial_validation_loss = mean_loss(model, val_x, val_y)
    logger.info(
        "Training a %s head on %d trials (%d for validation), initial validation loss %.6f",
        head_kind.value,
        len(train_split),
        len(val_split),
        history.initial_validation_loss,
    )

    best_model = model
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        epoch_losses = []
        for i in shuffle_rng.permutation(len(train_x)):
            trace = forward(model, train_x[i])
            epoch_losses.append(data_loss(trace, train_y[i]))
            grads = backward(model, trace, train_y[i])
            model, state = adam_step(model, grads, state, config)

        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(epoch_losses)),
            validation_loss=mean_loss(model, val_x, val_y),
        )
        history.records.append(record)
        logger.debug(
            "Epoch %d: train loss %.6f, validation loss %.6f",
            epoch,
            record.train_loss,
            record.validation_loss,
        )

        if record.validation_loss < history.best_validation_loss:
            history.best_validation_loss = record.validation_loss
            history.best_epoch = epoch
            best_model = model
            since_best = 0
        else:
            since_best += 1

        if config.early_stop and since_best >= config.patience:
            logger.info("No improvement for %d epochs, stopping at epoch %d", since_best, epoch)
            history.stopped_early = True
            break

    logger.info(
        "Finished after %d epoch(s); best epoch %d with validation loss %.6f",
        len(history.records),
        history.best_epoch,
        history.best_validation_loss,
    )
    return best_model, history, stats


@dataclass(frozen=True, eq=False)
class Prediction:
    """
    The output of a model for one trial.
    """

    trial_id: str
    head_kind: HeadKind

    #: The softmax probabilities (classification) or the raw outputs (regression).
    outputs: np.ndarray

    @property
    def skill(self) -> Optional[SkillLevel]:
        """
        :return: The argmax class of a classification prediction, or None.
        """
        if self.head_kind is not HeadKind.CLASSIFICATION:
            return None

        return SkillLevel(int(np.argmax(self.outputs)))

    @property
    def osats(self) -> Optional[OsatsScores]:
        """
        :return: The predicted OSATS scores of a regression prediction, or None.
        """
        if self.head_kind is not HeadKind.REGRESSION:
            return None

        return OsatsScores.from_sequence(self.outputs)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"trial_id": self.trial_id, "head": self.head_kind.value}
        if self.head_kind is HeadKind.CLASSIFICATION:
            data["skill"] = self.skill.name
            data["probabilities"] = dict(zip(self.head_kind.output_names, self.outputs.tolist()))
        else:
            data["osats"] = self.osats.to_dict()
            data["total"] = self.osats.total()

        return data


def predict(
    model: FcnModel, stats: StandardizationStats, trials: Iterable[KinematicTrial]
) -> List[Prediction]:
    """
    Runs a trained model over trials, standardizing them with the stats it was trained with.
    """
    predictions = []
    for trial in trials:
        trace = forward(model, stats.transform(trial.samples))
        predictions.append(Prediction(trial.trial_id, model.head_kind, trace.outputs))

    return predictions
