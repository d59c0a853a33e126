"""
End-to-end runs on the synthetic motif dataset. These train hundreds of epochs and are slow;
run them with ``pytest -m slow``.
"""
import pytest

from skilleval.cam import cam_localization_score, compute_cam
from skilleval.evaluation.experiment import run_experiment
from skilleval.evaluation.folds import loso_folds
from skilleval.kinematics.synth import SynthConfig, synth_dataset
from skilleval.nn.model import HeadKind
from skilleval.nn.network import forward
from skilleval.training.config import TrainConfig
from skilleval.training.trainer import predict, train

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def dataset():
    return synth_dataset(0, SynthConfig(n_per_class=10, motif_amplitude=3.0))


@pytest.fixture(scope="module")
def config():
    return TrainConfig(max_epochs=200, seed=0)


def test_loso_classification(dataset, config):
    report = run_experiment(dataset.trials, HeadKind.CLASSIFICATION, config, n_repeats=3, jobs=4)
    assert report.aggregate["micro"] >= 0.9


def test_loso_regression(dataset, config):
    report = run_experiment(dataset.trials, HeadKind.REGRESSION, config, n_repeats=3, jobs=4)
    assert report.aggregate["rho_mean"] >= 0.8


def test_maps_highlight_the_motif(dataset, config):
    fold = loso_folds(dataset.trials)[0]
    train_set, test_set = fold.split(dataset.trials)
    model, _, stats = train(train_set, HeadKind.CLASSIFICATION, config)

    train_predictions = predict(model, stats, train_set)
    assert all(p.skill is t.skill for p, t in zip(train_predictions, train_set))

    hits = total = 0
    for trial in test_set:
        trace = forward(model, stats.transform(trial.samples))
        predicted = int(trace.p.argmax())
        if predicted != int(trial.skill):
            continue

        cam = compute_cam(model, trace, predicted)
        inside, outside = cam_localization_score(cam.normalized, dataset.windows[trial.trial_id])
        hits += inside > outside
        total += 1

    assert total > 0
    assert hits >= 0.8 * total
