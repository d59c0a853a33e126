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
Repeated LOSO experiments.

Every (repeat, fold) pair is an independent training run. Runs may execute on worker threads;
their results are collected by key and reduced in sorted key order, so a report only depends on
the dataset, the head, the config and the number of repeats.

.. currentmodule:: skilleval.evaluation.experiment
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import trio

from skilleval.evaluation.folds import FoldSpec, loso_folds
from skilleval.evaluation.metrics import (
    confusion_matrix,
    macro_precision,
    micro_accuracy,
    per_class_precision,
    regression_rho,
)
from skilleval.exc import EmptyDataset, ExperimentRunError, InvalidConfig
from skilleval.kinematics.layout import ChannelLayout
from skilleval.kinematics.skill import OSATS_COMPONENTS, SkillLevel, SurgicalTask
from skilleval.kinematics.trial import KinematicTrial
from skilleval.nn.model import HeadKind
from skilleval.training.config import TrainConfig
from skilleval.training.trainer import Prediction, check_labels, predict, train
from skilleval.util import PathLike, derive_seed, write_json

logger = logging.getLogger("skilleval.evaluation")

#: How classes missing from a prediction set enter the macro measure.
MACRO_CONVENTION = (
    "classes absent from both predictions and truths are skipped; "
    "a class present but never predicted has precision 0"
)

RunKey = Tuple[int, int]


@dataclass
class RunResult:
    """
    The outcome of one (repeat, fold) training run.
    """

    repeat: int
    fold: FoldSpec
    seed: int
    predictions: List[Prediction]
    truths: List[KinematicTrial]
    best_epoch: int
    best_validation_loss: float


@dataclass
class EvalReport:
    """
    The metrics of a repeated LOSO experiment.

    For classification, every metrics dict has ``micro``, ``macro``, ``per_class_precision`` and
    ``confusion``; for regression it has ``rho_mean`` and ``rho_components``. Per-repeat values
    are computed on the predictions pooled over all folds of that repeat; the aggregate is their
    mean over repeats.
    """

    task: Optional[str]
    head_kind: HeadKind
    config: TrainConfig
    n_repeats: int

    #: The seed of each repeat; fold runs derive theirs from it.
    seeds: List[int] = field(default_factory=list)

    #: One entry per (repeat, fold), in key order.
    folds: List[Dict[str, Any]] = field(default_factory=list)

    #: One entry per repeat.
    repeats: List[Dict[str, Any]] = field(default_factory=list)

    aggregate: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "head": self.head_kind.value,
            "config_echo": self.config.to_dict(),
            "n_repeats": self.n_repeats,
            "seeds": list(self.seeds),
            "macro_convention": MACRO_CONVENTION,
            "folds": self.folds,
            "repeats": self.repeats,
            "aggregate": self.aggregate,
        }

    def write_json(self, path: PathLike) -> None:
        write_json(path, self.to_dict())

    def summary(self) -> str:
        """
        :return: A one-line human readable summary of the aggregate.
        """
        prefix = f"{self.task or 'all tasks'} ({self.n_repeats} repeat(s)): "
        if self.head_kind is HeadKind.CLASSIFICATION:
            return prefix + (
                f"micro {self.aggregate['micro']:.3f}, macro {self.aggregate['macro']:.3f}"
            )

        return prefix + f"rho {self.aggregate['rho_mean']:.3f}"


def _classification_metrics(predictions: List[Prediction], truths: List[KinematicTrial]) -> dict:
    predicted = [p.skill for p in predictions]
    actual = [t.skill for t in truths]
    return {
        "micro": micro_accuracy(predicted, actual),
        "macro": macro_precision(predicted, actual),
        "per_class_precision": {
            level.name: value for level, value in per_class_precision(predicted, actual).items()
        },
        "confusion": confusion_matrix(predicted, actual).tolist(),
    }


def _regression_metrics(predictions: List[Prediction], truths: List[KinematicTrial]) -> dict:
    rho = regression_rho([p.osats for p in predictions], [t.osats for t in truths])
    return {"rho_mean": rho["mean"], "rho_components": rho["per_component"]}


def _metrics(head_kind: HeadKind, predictions, truths) -> dict:
    if head_kind is HeadKind.CLASSIFICATION:
        return _classification_metrics(predictions, truths)

    return _regression_metrics(predictions, truths)


def _aggregate(head_kind: HeadKind, repeats: List[dict]) -> dict:
    if head_kind is HeadKind.CLASSIFICATION:
        precision = {}
        for level in SkillLevel:
            values = [r["per_class_precision"][level.name] for r in repeats]
            values = [v for v in values if v is not None]
            precision[level.name] = float(np.mean(values)) if values else None

        return {
            "micro": float(np.mean([r["micro"] for r in repeats])),
            "macro": float(np.mean([r["macro"] for r in repeats])),
            "micro_std": float(np.std([r["micro"] for r in repeats])),
            "macro_std": float(np.std([r["macro"] for r in repeats])),
            "per_class_precision": precision,
            "confusion": np.sum([r["confusion"] for r in repeats], axis=0).tolist(),
        }

    return {
        "rho_mean": float(np.mean([r["rho_mean"] for r in repeats])),
        "rho_std": float(np.std([r["rho_mean"] for r in repeats])),
        "rho_components": {
            name: float(np.mean([r["rho_components"][name] for r in repeats]))
            for name in OSATS_COMPONENTS
        },
    }


def _run_fold(
    trials: List[KinematicTrial],
    fold: FoldSpec,
    repeat: int,
    head_kind: HeadKind,
    config: TrainConfig,
    layout: Optional[ChannelLayout],
) -> RunResult:
    train_set, test_set = fold.split(trials)
    seed = derive_seed(derive_seed(config.seed, repeat), fold.index)
    logger.info(
        "Repeat %d, fold %d: holding out super trial %d (%d train, %d test)",
        repeat,
        fold.index,
        fold.held_out_super_trial,
        len(train_set),
        len(test_set),
    )

    model, history, stats = train(train_set, head_kind, config.replace(seed=seed), layout)
    return RunResult(
        repeat=repeat,
        fold=fold,
        seed=seed,
        predictions=predict(model, stats, test_set),
        truths=test_set,
        best_epoch=history.best_epoch,
        best_validation_loss=history.best_validation_loss,
    )


async def _run_concurrently(
    runs: Dict[RunKey, Callable[[], RunResult]], jobs: int
) -> Tuple[Dict[RunKey, RunResult], Dict[RunKey, BaseException]]:
    limiter = trio.CapacityLimiter(jobs)
    results: Dict[RunKey, RunResult] = {}
    errors: Dict[RunKey, BaseException] = {}

    async def worker(key: RunKey, fn: Callable[[], RunResult]):
        try:
            results[key] = await trio.to_thread.run_sync(fn, limiter=limiter)
        except Exception as e:
            logger.exception("Run (repeat %d, fold %d) failed", *key)
            errors[key] = e

    async with trio.open_nursery() as nursery:
        for key, fn in runs.items():
            nursery.start_soon(worker, key, fn)

    return results, errors


def _execute(
    runs: Dict[RunKey, Callable[[], RunResult]], folds: List[FoldSpec], jobs: int
) -> Dict[RunKey, RunResult]:
    if jobs == 1:
        results = {}
        for key, fn in runs.items():
            try:
                results[key] = fn()
            except Exception as e:
                logger.exception("Run (repeat %d, fold %d) failed", *key)
                raise ExperimentRunError(*key, folds[key[1]].held_out_super_trial) from e

        return results

    results, errors = trio.run(_run_concurrently, runs, jobs)
    if errors:
        key = min(errors)
        raise ExperimentRunError(*key, folds[key[1]].held_out_super_trial) from errors[key]

    return results


def run_experiment(
    dataset: Iterable[KinematicTrial],
    head_kind: HeadKind,
    config: Optional[TrainConfig] = None,
    n_repeats: int = 1,
    layout: Optional[ChannelLayout] = None,
    jobs: int = 1,
    task: Optional[SurgicalTask] = None,
) -> EvalReport:
    """
    Runs ``n_repeats`` rounds of LOSO cross-validation.

    Repeat ``r`` has the seed ``derive_seed(config.seed, r)`` and its fold ``f`` trains with
    ``derive_seed(repeat_seed, f)``. Test predictions are pooled over the folds of a repeat
    before metrics are computed.

    :param dataset: The labelled trials.
    :param head_kind: The kind of head to train.
    :param config: The training hyperparameters, or None for the defaults.
    :param n_repeats: The number of repeats.
    :param layout: The channel layout, or None for the default layout.
    :param jobs: The maximum number of runs executed at once.
    :param task: If given, only trials of this task are used.
    """
    if config is None:
        config = TrainConfig()

    if int(n_repeats) < 1:
        raise InvalidConfig(f"n_repeats must be at least 1, got {n_repeats}")

    if int(jobs) < 1:
        raise InvalidConfig(f"jobs must be at least 1, got {jobs}")

    trials = list(dataset)
    if task is not None:
        task = SurgicalTask.parse(task)
        trials = [t for t in trials if t.task is task]

    if not trials:
        raise EmptyDataset("No trials to evaluate on")

    check_labels(trials, head_kind)
    folds = loso_folds(trials)

    runs: Dict[RunKey, Callable[[], RunResult]] = {}
    for repeat in range(n_repeats):
        for fold in folds:
            runs[(repeat, fold.index)] = functools.partial(
                _run_fold, trials, fold, repeat, head_kind, config, layout
            )

    logger.info(
        "Running %d repeat(s) x %d fold(s) on %d trials with %d job(s)",
        n_repeats,
        len(folds),
        len(trials),
        jobs,
    )
    results = _execute(runs, folds, int(jobs))

    report = EvalReport(
        task=task.value if task is not None else None,
        head_kind=head_kind,
        config=config,
        n_repeats=n_repeats,
        seeds=[derive_seed(config.seed, r) for r in range(n_repeats)],
    )

    for repeat in range(n_repeats):
        pooled_predictions: List[Prediction] = []
        pooled_truths: List[KinematicTrial] = []
        for fold in folds:
            result = results[(repeat, fold.index)]
            pooled_predictions.extend(result.predictions)
            pooled_truths.extend(result.truths)

            entry = {
                "repeat": repeat,
                "fold": fold.index,
                "held_out_super_trial": fold.held_out_super_trial,
                "seed": result.seed,
                "best_epoch": result.best_epoch,
                "best_validation_loss": result.best_validation_loss,
                "test_ids": list(fold.test_ids),
                "predictions": [p.to_dict() for p in result.predictions],
            }
            if head_kind is HeadKind.CLASSIFICATION or len(result.truths) >= 2:
                entry["metrics"] = _metrics(head_kind, result.predictions, result.truths)
            else:
                entry["metrics"] = None

            report.folds.append(entry)

        metrics = _metrics(head_kind, pooled_predictions, pooled_truths)
        report.repeats.append({"repeat": repeat, "seed": report.seeds[repeat], **metrics})
        if head_kind is HeadKind.CLASSIFICATION:
            logger.info(
                "Repeat %d: micro %.3f, macro %.3f", repeat, metrics["micro"], metrics["macro"]
            )
        else:
            logger.info("Repeat %d: rho %.3f", repeat, metrics["rho_mean"])

    report.aggregate = _aggregate(head_kind, report.repeats)
    logger.info("Aggregate: %s", report.summary())
    return report
