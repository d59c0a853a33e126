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
The built-in commands of the ``skilleval`` command line.

.. currentmodule:: skilleval.commands.builtin
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import List, Optional, Tuple

from skilleval.cam import EXPORT_FORMATS, compute_cam, export_cam, select_outputs
from skilleval.commands.context import Context
from skilleval.commands.decorators import command, option
from skilleval.commands.exc import UsageError
from skilleval.evaluation.experiment import run_experiment
from skilleval.kinematics.layout import ChannelLayout
from skilleval.kinematics.manifest import load_dataset, read_manifest
from skilleval.kinematics.parsing import parse_kinematics
from skilleval.kinematics.skill import SurgicalTask
from skilleval.kinematics.synth import SynthConfig, synth_dataset, write_synthetic_dataset
from skilleval.kinematics.trial import DEFAULT_SAMPLE_RATE_HZ, MIN_LENGTH, KinematicTrial
from skilleval.nn.gradcheck import check_gradients, random_setup
from skilleval.nn.model import HeadKind
from skilleval.nn.network import forward
from skilleval.training.config import TrainConfig
from skilleval.training.serialization import load_model, save_model
from skilleval.training.trainer import predict, train
from skilleval.util import write_json

logger = logging.getLogger("skilleval.commands")

#: The environment variable that sets the default of ``--jobs``.
JOBS_ENV = "SKILLEVAL_JOBS"


def default_jobs() -> int:
    """
    :return: The ``--jobs`` default from ``SKILLEVAL_JOBS``, or 1 when unset or invalid.
    """
    raw = os.environ.get(JOBS_ENV)
    if not raw:
        return 1

    try:
        jobs = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", JOBS_ENV, raw)
        return 1

    return max(jobs, 1)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def _load_trials(
    manifest: Path, task: Optional[SurgicalTask]
) -> Tuple[List[KinematicTrial], ChannelLayout]:
    loaded = read_manifest(manifest)
    trials = load_dataset(loaded)
    if task is not None:
        trials = [t for t in trials if t.task is task]
        _require(bool(trials), f"The manifest has no {task.value} trials")
    else:
        tasks = sorted({t.task.value for t in trials})
        _require(
            len(tasks) <= 1, f"The manifest mixes tasks ({', '.join(tasks)}); pick one with --task"
        )

    return trials, loaded.effective_layout()


def _train_config(
    lr: float,
    l2: float,
    epochs: int,
    seed: int,
    val_fraction: float,
    standardize: bool,
    early_stop: bool,
    patience: int,
) -> TrainConfig:
    return TrainConfig(
        learning_rate=lr,
        l2_lambda=l2,
        max_epochs=epochs,
        seed=seed,
        validation_fraction=val_fraction,
        standardize=standardize,
        early_stop=early_stop,
        patience=patience,
    )


def _trial_from_file(path: Path, task: SurgicalTask, sample_rate: float) -> KinematicTrial:
    return KinematicTrial(
        trial_id=path.stem,
        subject_id="unknown",
        task=task,
        super_trial_index=1,
        samples=parse_kinematics(path),
        sample_rate_hz=sample_rate,
    )


@command(name="synth")
@option("--out", help="Output directory.")
@option("--seed", help="Master seed.")
@option("--per-class", help="Trials per skill level and task.")
@option("--tasks", help="Comma separated tasks.")
@option("--amplitude", help="Motif amplitude, in noise standard deviations.")
@option("--super-trials", help="Super trials per subject.")
@option("--min-length", help="Shortest trial.")
@option("--max-length", help="Longest trial.")
def cmd_synth(
    ctx: Context,
    out: Path,
    seed: int = 0,
    per_class: int = SynthConfig.n_per_class,
    tasks: List[SurgicalTask] = (SurgicalTask.SUTURING,),
    amplitude: float = SynthConfig.motif_amplitude,
    super_trials: int = SynthConfig.super_trials,
    min_length: int = SynthConfig.length_range[0],
    max_length: int = SynthConfig.length_range[1],
):
    """
    Generates a labelled synthetic dataset with known motif windows.
    """
    _require(per_class >= 1, "--per-class must be at least 1")
    config = SynthConfig(
        n_per_class=per_class,
        length_range=(min_length, max_length),
        motif_amplitude=amplitude,
        super_trials=super_trials,
        tasks=tuple(tasks),
    )
    dataset = synth_dataset(seed, config)
    manifest_path = write_synthetic_dataset(dataset, out)
    ctx.echo(manifest_path)


@command(name="train")
@option("--manifest", help="Dataset manifest.")
@option("--out", help="Model file to write.")
@option("--task", help="Task to train on; required when the manifest mixes tasks.")
@option("--head", help="Output head.")
@option("--lr", help="Adam learning rate.")
@option("--l2", help="L2 regularization coefficient.")
@option("--epochs", help="Epoch budget.")
@option("--seed", help="Master seed.")
@option("--val-fraction", help="Share of trials held out for checkpoint selection.")
@option("--no-standardize", dest="standardize", help="Skip z-standardization.")
@option("--early-stop", help="Stop after --patience epochs without improvement.")
@option("--patience", help="Early stopping patience.")
@option("--history", help="History file; defaults to <out>.history.json.")
def cmd_train(
    ctx: Context,
    manifest: Path,
    out: Path,
    task: Optional[SurgicalTask] = None,
    head: HeadKind = HeadKind.CLASSIFICATION,
    lr: float = TrainConfig.learning_rate,
    l2: float = TrainConfig.l2_lambda,
    epochs: int = TrainConfig.max_epochs,
    seed: int = TrainConfig.seed,
    val_fraction: float = TrainConfig.validation_fraction,
    standardize: bool = True,
    early_stop: bool = False,
    patience: int = TrainConfig.patience,
    history: Optional[Path] = None,
):
    """
    Trains a model on a manifest and writes it with its training history.
    """
    config = _train_config(lr, l2, epochs, seed, val_fraction, standardize, early_stop, patience)
    trials, layout = _load_trials(manifest, task)

    model, train_history, stats = train(trials, head, config, layout)
    save_model(model, stats, out)

    history_path = history or out.with_suffix(".history.json")
    write_json(history_path, train_history.to_dict())
    ctx.echo(
        f"best epoch {train_history.best_epoch}, "
        f"validation loss {train_history.best_validation_loss:.6f}"
    )
    ctx.echo(out)


@command(name="eval")
@option("--manifest", help="Dataset manifest.")
@option("--report", help="Report file to write.")
@option("--task", help="Task to evaluate; required when the manifest mixes tasks.")
@option("--head", help="Output head.")
@option("--repeats", help="Number of LOSO repeats.")
@option("--seed", help="Master seed.")
@option("--jobs", default=default_jobs, help=f"Concurrent training runs (env: {JOBS_ENV}).")
@option("--lr", help="Adam learning rate.")
@option("--l2", help="L2 regularization coefficient.")
@option("--epochs", help="Epoch budget.")
@option("--val-fraction", help="Share of trials held out for checkpoint selection.")
@option("--no-standardize", dest="standardize", help="Skip z-standardization.")
@option("--early-stop", help="Stop after --patience epochs without improvement.")
@option("--patience", help="Early stopping patience.")
def cmd_eval(
    ctx: Context,
    manifest: Path,
    report: Path,
    task: Optional[SurgicalTask] = None,
    head: HeadKind = HeadKind.CLASSIFICATION,
    repeats: int = 1,
    seed: int = TrainConfig.seed,
    jobs: int = 1,
    lr: float = TrainConfig.learning_rate,
    l2: float = TrainConfig.l2_lambda,
    epochs: int = TrainConfig.max_epochs,
    val_fraction: float = TrainConfig.validation_fraction,
    standardize: bool = True,
    early_stop: bool = False,
    patience: int = TrainConfig.patience,
):
    """
    Runs repeated leave-one-super-trial-out evaluation and writes a report.
    """
    _require(repeats >= 1, "--repeats must be at least 1")
    _require(jobs >= 1, "--jobs must be at least 1")
    config = _train_config(lr, l2, epochs, seed, val_fraction, standardize, early_stop, patience)
    trials, layout = _load_trials(manifest, task)

    result = run_experiment(
        trials, head, config, n_repeats=repeats, layout=layout, jobs=jobs, task=task
    )
    result.write_json(report)

    if head is HeadKind.CLASSIFICATION:
        ctx.echo(f"micro {result.aggregate['micro']:.3f}")
        ctx.echo(f"macro {result.aggregate['macro']:.3f}")
    else:
        for name, rho in result.aggregate["rho_components"].items():
            ctx.echo(f"rho {name} {rho:.3f}")

        ctx.echo(f"rho mean {result.aggregate['rho_mean']:.3f}")


@command(name="cam")
@option("--model", help="Model file.")
@option("--kinematics", help="Kinematics file of one trial.")
@option("--out", help="Export file to write.")
@option("--outputs", help="'predicted', 'all', or comma separated output indices.")
@option("--format", dest="export_format", choices=EXPORT_FORMATS, help="Export format.")
@option("--task", help="Task of the trial.")
@option("--sample-rate", help="Sampling frequency of the trial, in Hz.")
def cmd_cam(
    ctx: Context,
    model: Path,
    kinematics: Path,
    out: Path,
    outputs: str = "predicted",
    export_format: str = "csv",
    task: SurgicalTask = SurgicalTask.SUTURING,
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ,
):
    """
    Computes class activation maps of one trial and exports them.
    """
    fcn, stats = load_model(model)
    trial = _trial_from_file(kinematics, task, sample_rate)
    trace = forward(fcn, stats.transform(trial.samples))

    indices = select_outputs(fcn.head_kind, outputs, trace)
    cams = [compute_cam(fcn, trace, index) for index in indices]
    export_cam(trial, cams, out, format=export_format, layout=fcn.layout)

    ctx.echo(", ".join(cam.output_name for cam in cams))
    ctx.echo(out)


@command(name="predict")
@option("--model", help="Model file.")
@option("--kinematics", help="Kinematics file of one trial.")
@option("--out", help="Optional JSON file for the prediction.")
@option("--task", help="Task of the trial.")
def cmd_predict(
    ctx: Context,
    model: Path,
    kinematics: Path,
    out: Optional[Path] = None,
    task: SurgicalTask = SurgicalTask.SUTURING,
):
    """
    Predicts the skill level (or OSATS scores) of one trial.
    """
    fcn, stats = load_model(model)
    trial = _trial_from_file(kinematics, task, DEFAULT_SAMPLE_RATE_HZ)
    (prediction,) = predict(fcn, stats, [trial])

    if fcn.head_kind is HeadKind.CLASSIFICATION:
        ctx.echo(prediction.skill.name)
    else:
        for name, value in prediction.osats.to_dict().items():
            ctx.echo(f"{name} {value:.3f}")

        ctx.echo(f"total {prediction.osats.total():.3f}")

    if out is not None:
        write_json(out, prediction.to_dict())


@command(name="gradcheck")
@option("--seed", help="Seed of the random model and trial.")
@option("--length", help="Trial length.")
@option("--entries", help="Entries checked per tensor (0 checks all).")
@option("--head", help="Only check this head (both by default).")
def cmd_gradcheck(
    ctx: Context,
    seed: int = 0,
    length: int = 40,
    entries: int = 20,
    head: Optional[HeadKind] = None,
):
    """
    Compares analytic gradients with central finite differences.
    """
    _require(length >= MIN_LENGTH, f"--length must be at least {MIN_LENGTH}")
    _require(entries >= 0, "--entries must not be negative")

    heads = [head] if head is not None else list(HeadKind)
    reports = []
    for head_kind in heads:
        model, samples, target = random_setup(seed, length, head_kind)
        report = check_gradients(model, samples, target, entries=entries, seed=seed)
        reports.append(report)

        ctx.echo(f"{head_kind.value}:")
        for check in report.checks:
            status = "ok" if check.passed(report.tolerance) else "FAIL"
            ctx.echo(
                f"  {check.name:<28} {check.max_rel_error:.3e} "
                f"({check.checked} checked, {check.kinks} kinks) {status}"
            )

    for report in reports:
        report.raise_for_failures()

    ctx.echo("passed")
