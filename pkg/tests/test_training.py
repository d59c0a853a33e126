import json

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skilleval.exc import (
    CorruptModel,
    EmptyDataset,
    InvalidConfig,
    IoError,
    LabelMismatch,
    ShapeMismatch,
    TooFewTrials,
    VersionMismatch,
)
from skilleval.kinematics.layout import N_CHANNELS, layout_from_blocks
from skilleval.kinematics.skill import SkillLevel
from skilleval.kinematics.standardization import StandardizationStats
from skilleval.nn.model import HeadKind, init_model
from skilleval.nn.network import forward
from skilleval.training.config import TrainConfig
from skilleval.training.optimizer import AdamState, adam_update
from skilleval.training.serialization import (
    FORMAT_VERSION,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from skilleval.training.trainer import (
    check_labels,
    mean_loss,
    predict,
    split_validation,
    target_of,
    train,
    validation_size,
)
from skilleval.util import make_rng

from tests.conftest import make_trial


class TestConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.learning_rate == 0.001
        assert (config.beta1, config.beta2, config.epsilon_adam) == (0.9, 0.999, 1e-8)
        assert config.l2_lambda == 1e-5
        assert config.max_epochs == 1000
        assert config.validation_fraction == 0.1

    @pytest.mark.parametrize(
        "changes",
        [
            {"learning_rate": 0},
            {"beta1": 1.0},
            {"l2_lambda": -1},
            {"max_epochs": 0},
            {"validation_fraction": 1.0},
            {"patience": 0},
        ],
    )
    def test_invalid(self, changes):
        with pytest.raises(InvalidConfig):
            TrainConfig(**changes)


class TestAdam:
    def test_first_step(self):
        config = TrainConfig(l2_lambda=0.0)
        params, state = adam_update(
            [np.zeros(1)], [np.ones(1)], AdamState.zeros_like([np.zeros(1)]), config
        )

        assert state.t == 1
        assert params[0][0] == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-15)

    def test_two_steps_match_recurrence(self):
        config = TrainConfig()
        theta, g = np.array([0.3, -1.2]), np.array([0.5, 2.0])
        params, state = (theta,), AdamState.zeros_like([theta])
        for _ in range(2):
            params, state = adam_update(params, [g], state, config)

        m = v = np.zeros(2)
        expected = theta
        for t in (1, 2):
            grad = g + 1e-5 * expected
            m = 0.9 * m + (1.0 - 0.9) * grad
            v = 0.999 * v + (1.0 - 0.999) * grad * grad
            m_hat, v_hat = m / (1 - 0.9 ** t), v / (1 - 0.999 ** t)
            expected = expected - 0.001 * m_hat / (np.sqrt(v_hat) + 1e-8)

        npt.assert_allclose(params[0], expected, atol=1e-15)

    def test_inputs_are_untouched(self):
        theta = np.ones(3)
        state = AdamState.zeros_like([theta])
        adam_update([theta], [np.ones(3)], state, TrainConfig())

        npt.assert_array_equal(theta, 1.0)
        assert state.t == 0
        npt.assert_array_equal(state.m[0], 0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        theta=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8),
        steps=st.integers(1, 5),
    )
    def test_zero_gradient_without_decay_keeps_parameters(self, theta, steps):
        theta = np.array(theta)
        config = TrainConfig(l2_lambda=0.0)
        params, state = (theta,), AdamState.zeros_like([theta])
        for _ in range(steps):
            params, state = adam_update(params, [np.zeros_like(theta)], state, config)

        npt.assert_array_equal(params[0], theta)
        assert state.t == steps

    def test_shape_mismatch(self):
        state = AdamState.zeros_like([np.zeros(2)])
        with pytest.raises(ShapeMismatch):
            adam_update([np.zeros(2)], [np.zeros(3)], state, TrainConfig())

        with pytest.raises(ShapeMismatch):
            adam_update([np.zeros(2), np.zeros(2)], [np.zeros(2)], state, TrainConfig())


class TestSplit:
    def test_sizes(self):
        assert validation_size(10, 0.1) == 1
        assert validation_size(30, 0.2) == 6
        assert validation_size(3, 0.01) == 1
        assert validation_size(2, 0.9) == 1

    def test_ten_trials(self, rng):
        trials = [make_trial(rng, super_trial=i + 1) for i in range(10)]
        train_split, val_split = split_validation(trials, 0.1, make_rng(0))

        assert (len(train_split), len(val_split)) == (9, 1)
        assert {t.trial_id for t in train_split} | {t.trial_id for t in val_split} == {
            t.trial_id for t in trials
        }

    def test_stratified(self, rng):
        trials = [
            make_trial(rng, skill=level, super_trial=n + 1)
            for level in SkillLevel
            for n in range(10)
        ]
        _, val_split = split_validation(trials, 0.2, make_rng(1))

        assert len(val_split) == 6
        for level in SkillLevel:
            assert sum(t.skill is level for t in val_split) == 2

    def test_stratified_keeps_singletons_in_training(self, rng):
        trials = [make_trial(rng, skill=SkillLevel.EXPERT)] + [
            make_trial(rng, skill=SkillLevel.NOVICE, super_trial=n + 1) for n in range(5)
        ]
        train_split, val_split = split_validation(trials, 0.5, make_rng(2))

        assert any(t is trials[0] for t in train_split)
        assert len(val_split) == 3

    def test_singleton_class_always_trains(self, rng):
        trials = [make_trial(rng, skill=SkillLevel.NOVICE)] + [
            make_trial(rng, skill=SkillLevel.EXPERT, super_trial=n + 2) for n in range(2)
        ]
        for seed in range(50):
            train_split, val_split = split_validation(trials, 0.9, make_rng(seed))

            assert any(t is trials[0] for t in train_split)
            assert sum(t.skill is SkillLevel.EXPERT for t in train_split) == 1
            assert len(val_split) == 1

    def test_all_singletons_leave_nothing_to_validate(self, rng):
        trials = [make_trial(rng, skill=level, super_trial=int(level) + 1) for level in SkillLevel]
        train_split, val_split = split_validation(trials, 0.5, make_rng(0))

        assert len(train_split) == 3
        assert val_split == []

    def test_keeps_input_order(self, rng):
        trials = [make_trial(rng, super_trial=i + 1) for i in range(8)]
        train_split, val_split = split_validation(trials, 0.25, make_rng(5))

        order = {t.trial_id: i for i, t in enumerate(trials)}
        for split in (train_split, val_split):
            indices = [order[t.trial_id] for t in split]
            assert indices == sorted(indices)

    def test_too_few(self, rng):
        with pytest.raises(TooFewTrials):
            split_validation([make_trial(rng)], 0.1, make_rng(0))


class TestTrain:
    def test_single_epoch(self, small_synth):
        config = TrainConfig(max_epochs=1, seed=0)
        model, history, _ = train(small_synth.trials, HeadKind.CLASSIFICATION, config)

        assert history.best_epoch == 1
        assert len(history.records) == 1
        assert history.best_validation_loss == history.records[0].validation_loss
        assert model.head_kind is HeadKind.CLASSIFICATION

    def test_is_deterministic(self, small_synth, quick_config):
        first, history, stats = train(small_synth.trials, HeadKind.REGRESSION, quick_config)
        second, again, _ = train(small_synth.trials, HeadKind.REGRESSION, quick_config)

        for a, b in zip(first.parameters(), second.parameters()):
            npt.assert_array_equal(a, b)

        assert history.to_dict() == again.to_dict()
        assert set(history.train_ids).isdisjoint(history.validation_ids)

    def test_standardization_uses_training_split(self, small_synth, quick_config):
        _, history, stats = train(small_synth.trials, HeadKind.CLASSIFICATION, quick_config)
        train_trials = [t for t in small_synth if t.trial_id in history.train_ids]

        pooled = np.concatenate([t.samples for t in train_trials])
        npt.assert_allclose(stats.mean, pooled.mean(axis=0), atol=1e-12)

    def test_no_standardization(self, small_synth, quick_config):
        _, _, stats = train(
            small_synth.trials, HeadKind.CLASSIFICATION, quick_config.replace(standardize=False)
        )
        npt.assert_array_equal(stats.mean, 0.0)
        npt.assert_array_equal(stats.std, 1.0)

    def test_fraction_zero_validates_on_training_set(self, small_synth, quick_config):
        _, history, _ = train(
            small_synth.trials, HeadKind.CLASSIFICATION, quick_config.replace(validation_fraction=0)
        )
        assert history.train_ids == history.validation_ids

    def test_early_stop(self, small_synth, monkeypatch):
        # a flat validation loss only improves on the first epoch
        monkeypatch.setattr("skilleval.training.trainer.mean_loss", lambda *args: 1.0)
        config = TrainConfig(max_epochs=50, early_stop=True, patience=3, seed=0)
        _, history, _ = train(small_synth.trials, HeadKind.REGRESSION, config)

        assert history.stopped_early
        assert len(history.records) == config.patience + 1
        assert history.best_epoch == 1

    def test_runs_all_epochs_without_early_stop(self, small_synth, monkeypatch):
        monkeypatch.setattr("skilleval.training.trainer.mean_loss", lambda *args: 1.0)
        config = TrainConfig(max_epochs=4, patience=1, seed=0)
        _, history, _ = train(small_synth.trials, HeadKind.REGRESSION, config)

        assert not history.stopped_early
        assert len(history.records) == 4

    def test_returns_the_best_checkpoint(self, small_synth, head_kind):
        config = TrainConfig(max_epochs=6, validation_fraction=0.2, learning_rate=0.01, seed=7)
        model, history, stats = train(small_synth.trials, head_kind, config)

        val_trials = [t for t in small_synth if t.trial_id in history.validation_ids]
        val_x = [stats.transform(t.samples) for t in val_trials]
        val_y = [target_of(t, head_kind) for t in val_trials]

        assert mean_loss(model, val_x, val_y) == pytest.approx(
            history.best_validation_loss, abs=1e-12
        )
        assert min(history.validation_losses) == history.best_validation_loss
        assert history.records[history.best_epoch - 1].validation_loss == (
            history.best_validation_loss
        )

    def test_trains_when_no_class_can_spare_a_trial(self, rng):
        trials = [make_trial(rng, skill=level, super_trial=int(level) + 1) for level in SkillLevel]
        _, history, _ = train(trials, HeadKind.CLASSIFICATION, TrainConfig(max_epochs=1))

        assert history.validation_ids == history.train_ids

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            train([], HeadKind.CLASSIFICATION)

    def test_missing_labels(self, rng):
        trials = [make_trial(rng, super_trial=1), make_trial(rng, super_trial=2)]
        with pytest.raises(LabelMismatch):
            check_labels(trials, HeadKind.REGRESSION)

        with pytest.raises(LabelMismatch):
            train(trials, HeadKind.REGRESSION, TrainConfig(max_epochs=1))

    def test_predict(self, small_synth, quick_config):
        model, _, stats = train(small_synth.trials, HeadKind.REGRESSION, quick_config)
        predictions = predict(model, stats, small_synth.trials[:2])

        assert [p.trial_id for p in predictions] == [t.trial_id for t in small_synth.trials[:2]]
        assert predictions[0].skill is None
        document = predictions[0].to_dict()
        assert document["total"] == pytest.approx(sum(document["osats"].values()))


@pytest.mark.slow
def test_learns_separable_synthetic_data(small_synth):
    config = TrainConfig(max_epochs=200, validation_fraction=0.2, seed=0)
    model, history, stats = train(small_synth.trials, HeadKind.CLASSIFICATION, config)
    train_trials = [t for t in small_synth if t.trial_id in history.train_ids]

    predictions = predict(model, stats, train_trials)
    assert all(p.skill is t.skill for p, t in zip(predictions, train_trials))
    assert history.best_validation_loss <= history.initial_validation_loss


class TestSerialization:
    def test_round_trip(self, tmp_path, head_kind, rng):
        model = init_model(head_kind, make_rng(3), layout_from_blocks((19, 0, 57, 38)))
        stats = StandardizationStats(
            mean=rng.standard_normal(N_CHANNELS), std=np.full(N_CHANNELS, 2.0)
        )
        path = tmp_path / "model.json"

        save_model(model, stats, path)
        loaded, loaded_stats = load_model(path)

        samples = rng.standard_normal((9, N_CHANNELS))
        npt.assert_array_equal(forward(loaded, samples).z, forward(model, samples).z)
        npt.assert_array_equal(loaded_stats.mean, stats.mean)
        assert loaded.layout == model.layout

    def test_document(self):
        model = init_model(HeadKind.CLASSIFICATION, make_rng(0))
        document = model_to_dict(model, StandardizationStats.identity())

        assert document["format_version"] == FORMAT_VERSION
        assert len(document["params"]["layer1"]) == 20
        assert document["params"]["layer1"][5]["name"] == "layer1.MR.0"
        assert document["architecture"]["parameter_count"] == model.parameter_count()

    def test_truncated(self, tmp_path):
        model = init_model(HeadKind.CLASSIFICATION, make_rng(0))
        path = tmp_path / "model.json"
        save_model(model, StandardizationStats.identity(), path)
        path.write_text(path.read_text()[:500])

        with pytest.raises(CorruptModel):
            load_model(path)

    def test_wrong_version(self):
        document = model_to_dict(
            init_model(HeadKind.CLASSIFICATION, None), StandardizationStats.identity()
        )
        document["format_version"] = 0

        with pytest.raises(VersionMismatch):
            model_from_dict(document)

    def test_wrong_shape(self):
        document = model_to_dict(
            init_model(HeadKind.REGRESSION, None), StandardizationStats.identity()
        )
        document["params"]["head_b"] = [0.0] * 3

        with pytest.raises(CorruptModel):
            model_from_dict(document)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_model(tmp_path / "missing.json")

    def test_is_stable_json(self, tmp_path):
        model = init_model(HeadKind.CLASSIFICATION, make_rng(1))
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        save_model(model, StandardizationStats.identity(), first)
        save_model(load_model(first)[0], StandardizationStats.identity(), second)

        assert first.read_bytes() == second.read_bytes()
        assert json.loads(first.read_text())["head"] == "classification"
