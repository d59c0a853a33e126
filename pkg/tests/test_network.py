from itertools import count

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skilleval.exc import (
    ChannelMismatch,
    GradientCheckFailed,
    HeadMismatch,
    InvalidConfig,
    LengthTooShort,
    ShapeMismatch,
)
from skilleval.kinematics.layout import N_CHANNELS, default_channel_layout, layout_from_blocks
from skilleval.kinematics.skill import OsatsScores, SkillLevel
from skilleval.nn.gradcheck import (
    GradcheckReport,
    TensorCheck,
    check_gradients,
    random_setup,
    relative_error,
)
from skilleval.nn.layers import conv1d_forward, gap, relu, softmax
from skilleval.nn.model import (
    FcnModel,
    HeadKind,
    build_model,
    expected_parameter_count,
    init_model,
    parameter_shapes,
)
from skilleval.nn.network import (
    ForwardTrace,
    backward,
    cross_entropy_loss,
    data_loss,
    forward,
    mse_loss,
    predict_outputs,
)
from skilleval.util import make_rng


def confident_model(level: SkillLevel) -> FcnModel:
    # zero head weights and one huge bias put all the probability on one class
    model = init_model(HeadKind.CLASSIFICATION, make_rng(4))
    tensors = model.parameters()
    tensors[-2] = np.zeros((len(SkillLevel), 32))
    tensors[-1] = np.where(np.arange(len(SkillLevel)) == int(level), 800.0, 0.0)
    return model.with_parameters(tensors)


def trace_arrays(trace):
    return [trace.inputs, *trace.stage1, *trace.stage2, trace.activations, trace.pooled, trace.z]

class TestModel:
    def test_parameter_count(self, head_kind):
        model = init_model(head_kind, make_rng(0))
        assert model.parameter_count() == expected_parameter_count(head_kind)
        assert len(model.parameters()) == 2 * (20 + 4 + 1) + 2

    def test_shapes(self):
        shapes = dict(parameter_shapes(HeadKind.CLASSIFICATION))
        assert shapes["layer1.ML.0.kernels"] == (8, 3, 3)
        assert shapes["layer1.SR.3.kernels"] == (8, 9, 3)
        assert shapes["layer1.MR.4.kernels"] == (8, 1, 3)
        assert shapes["layer2.SL.kernels"] == (16, 40, 3)
        assert shapes["layer3.kernels"] == (32, 64, 3)
        assert shapes["head.weights"] == (3, 32)
        assert dict(parameter_shapes(HeadKind.REGRESSION))["head.biases"] == (6,)

    def test_init_is_seeded(self):
        first = init_model(HeadKind.CLASSIFICATION, make_rng(9))
        second = init_model(HeadKind.CLASSIFICATION, make_rng(9))
        for a, b in zip(first.parameters(), second.parameters()):
            npt.assert_array_equal(a, b)

    def test_biases_start_at_zero(self):
        model = init_model(HeadKind.REGRESSION, make_rng(1))
        for name, tensor in model.named_parameters():
            if name.endswith("biases"):
                assert not tensor.any()

    def test_with_parameters_checks_shapes(self):
        model = init_model(HeadKind.CLASSIFICATION, make_rng(0))
        tensors = model.parameters()

        with pytest.raises(ShapeMismatch):
            model.with_parameters(tensors[:-1])

        tensors[-2] = np.zeros((6, 32))
        with pytest.raises(ShapeMismatch):
            build_model(HeadKind.CLASSIFICATION, model.layout, tensors)

    def test_unknown_head(self):
        with pytest.raises(InvalidConfig):
            init_model("classification", make_rng(0))


class TestForward:
    def test_zero_model_is_uniform(self, rng):
        model = init_model(HeadKind.CLASSIFICATION, None)
        trace = forward(model, rng.standard_normal((10, N_CHANNELS)))

        npt.assert_allclose(trace.p, 1 / 3, atol=1e-15)
        npt.assert_array_equal(trace.z, 0.0)

    def test_shapes(self, head_kind, rng):
        model = init_model(head_kind, make_rng(2))
        trace = forward(model, rng.standard_normal((17, N_CHANNELS)))

        assert trace.length == 17
        assert len(trace.stage1) == 20
        assert all(m.shape == (8, 17) for m in trace.stage1)
        assert all(m.shape == (16, 17) for m in trace.stage2)
        assert trace.activations.shape == (32, 17)
        assert trace.outputs.shape == (head_kind.n_out,)
        assert (trace.p is None) == (head_kind is HeadKind.REGRESSION)

    def test_matches_layer_composition(self, rng):
        model, samples, _ = random_setup(4, 25, HeadKind.CLASSIFICATION)
        trace = forward(model, samples)

        x = samples.T
        layout = model.layout
        convs = iter(model.layer1)
        stage2 = []
        for g, group in enumerate(layout.groups):
            maps = [relu(conv1d_forward(x[list(sub)], next(convs))) for sub in group.subclusters]
            stage2.append(relu(conv1d_forward(np.vstack(maps), model.layer2[g])))

        a = relu(conv1d_forward(np.vstack(stage2), model.layer3))
        z = model.head_w @ gap(a) + model.head_b

        npt.assert_allclose(trace.activations, a, atol=1e-12)
        npt.assert_allclose(trace.z, z, atol=1e-12)
        npt.assert_allclose(trace.p, softmax(z), atol=1e-12)

    def test_layout_permutes_channels(self, rng):
        # a model whose layout reads the blocks in reverse sees reversed blocks as the original
        model = init_model(HeadKind.REGRESSION, make_rng(8))
        reversed_layout = layout_from_blocks((57, 38, 19, 0))
        permuted = FcnModel(
            head_kind=model.head_kind,
            layout=reversed_layout,
            layer1=model.layer1,
            layer2=model.layer2,
            layer3=model.layer3,
            head_w=model.head_w,
            head_b=model.head_b,
        )
        samples = rng.standard_normal((12, N_CHANNELS))
        swapped = np.hstack(
            [samples[:, 57:], samples[:, 38:57], samples[:, 19:38], samples[:, :19]]
        )

        npt.assert_allclose(forward(permuted, swapped).z, forward(model, samples).z, atol=1e-12)

    def test_variable_length(self, head_kind, rng):
        model = init_model(head_kind, make_rng(3))
        for length in (3, 4, 50):
            assert predict_outputs(model, rng.standard_normal((length, N_CHANNELS))).shape == (
                head_kind.n_out,
            )

    @settings(max_examples=10, deadline=None)
    @given(
        seed=st.integers(0, 2 ** 32 - 1),
        length=st.integers(3, 30),
        head_kind=st.sampled_from(list(HeadKind)),
    )
    def test_is_bitwise_repeatable(self, seed, length, head_kind):
        model, samples, _ = random_setup(seed, length, head_kind)
        first, second = forward(model, samples), forward(model, samples)

        for a, b in zip(trace_arrays(first), trace_arrays(second)):
            npt.assert_array_equal(a, b)

        if head_kind is HeadKind.CLASSIFICATION:
            npt.assert_array_equal(first.p, second.p)

    def test_rejects_bad_input(self, rng):
        model = init_model(HeadKind.CLASSIFICATION, make_rng(0))
        with pytest.raises(ChannelMismatch):
            forward(model, rng.standard_normal((10, 75)))

        with pytest.raises(LengthTooShort):
            forward(model, rng.standard_normal((2, N_CHANNELS)))


class TestLosses:
    def test_cross_entropy(self, rng):
        p = softmax(rng.standard_normal(3))
        for level in SkillLevel:
            assert cross_entropy_loss(p, level) == pytest.approx(-np.log(p[level]), abs=1e-15)

    def test_cross_entropy_floor(self):
        assert cross_entropy_loss(np.array([1.0, 0.0, 0.0]), SkillLevel.EXPERT) == pytest.approx(
            -np.log(1e-12)
        )

    def test_mse(self, rng):
        y_hat, y = rng.standard_normal(6), rng.standard_normal(6)
        assert mse_loss(y_hat, y) == pytest.approx(sum((y - y_hat) ** 2) / 6, abs=1e-15)

    def test_head_mismatch(self, rng):
        trace = forward(init_model(HeadKind.CLASSIFICATION, None), rng.standard_normal((5, 76)))
        with pytest.raises(HeadMismatch):
            data_loss(trace, OsatsScores.from_sequence([1] * 6))

        trace = forward(init_model(HeadKind.REGRESSION, None), rng.standard_normal((5, 76)))
        with pytest.raises(HeadMismatch):
            data_loss(trace, SkillLevel.NOVICE)

        with pytest.raises(HeadMismatch):
            data_loss(trace, np.zeros(3))


class TestBackward:
    def test_gradient_layout(self, head_kind):
        model, samples, target = random_setup(0, 12, head_kind)
        grads = backward(model, forward(model, samples), target)

        assert len(grads) == len(model.parameters())
        for (name, tensor), (grad_name, grad) in zip(model.named_parameters(), grads.named()):
            assert name == grad_name
            assert grad.shape == tensor.shape

    def test_head_gradient_classification(self):
        model, samples, target = random_setup(1, 10, HeadKind.CLASSIFICATION)
        trace = forward(model, samples)
        grads = dict(backward(model, trace, target).named())

        delta = trace.p.copy()
        delta[int(target)] -= 1.0
        npt.assert_allclose(grads["head.biases"], delta)
        npt.assert_allclose(grads["head.weights"], np.outer(delta, trace.pooled))

    def test_gradcheck(self, head_kind):
        model, samples, target = random_setup(0, 40, head_kind)
        report = check_gradients(model, samples, target, entries=20, seed=0)

        assert report.passed, report.failures()
        assert report.max_rel_error < 1e-4
        assert sum(check.checked for check in report.checks) > 0

    def test_gradcheck_catches_wrong_gradients(self, monkeypatch):
        import skilleval.nn.gradcheck as gradcheck

        model, samples, target = random_setup(0, 10, HeadKind.REGRESSION)
        real_backward = gradcheck.backward

        def broken(model, trace, target):
            grads = real_backward(model, trace, target)
            tensors = list(grads.tensors)
            tensors[-1] = tensors[-1] * 2.0
            return type(grads)(names=grads.names, tensors=tuple(tensors))

        monkeypatch.setattr(gradcheck, "backward", broken)
        report = check_gradients(model, samples, target, entries=5)

        assert not report.passed
        assert "head.biases" in report.failures()
        with pytest.raises(GradientCheckFailed):
            report.raise_for_failures()

    def test_confident_correct_class_has_zero_gradient(self, rng):
        model = confident_model(SkillLevel.EXPERT)
        trace = forward(model, rng.standard_normal((15, N_CHANNELS)))

        assert trace.p[SkillLevel.EXPERT] == 1.0
        for name, grad in backward(model, trace, SkillLevel.EXPERT).named():
            assert not grad.any(), name

    def test_floored_loss_has_zero_gradient(self, rng):
        model = confident_model(SkillLevel.EXPERT)
        trace = forward(model, rng.standard_normal((15, N_CHANNELS)))

        assert data_loss(trace, SkillLevel.NOVICE) == pytest.approx(-np.log(1e-12))
        for name, grad in backward(model, trace, SkillLevel.NOVICE).named():
            assert not grad.any(), name

    def test_exact_regression_has_zero_gradient(self, rng):
        model, samples, _ = random_setup(5, 15, HeadKind.REGRESSION)
        trace = forward(model, samples)

        for name, grad in backward(model, trace, trace.z.copy()).named():
            assert not grad.any(), name

    def test_random_setup_rejects_short_trials(self):
        with pytest.raises(InvalidConfig):
            random_setup(0, 2, HeadKind.CLASSIFICATION)


class TestGradcheckReport:
    def test_relative_error_floor(self):
        assert relative_error(0.0, 0.0) == 0.0
        assert relative_error(1e-9, 0.0) == pytest.approx(1e-4)
        assert relative_error(1.0, 1.0 + 1e-6) < 1e-6

    def test_unchecked_tensor_fails(self):
        check = TensorCheck("a", 0.0, 0, 4)

        assert not check.passed()
        report = GradcheckReport(HeadKind.REGRESSION, (check,))
        assert np.isnan(report.failures()["a"])

    def test_every_entry_at_a_kink_fails(self, monkeypatch):
        # every perturbed trace reports a fresh activation pattern
        patterns = count()
        monkeypatch.setattr(
            ForwardTrace, "activation_pattern", lambda self: np.array([next(patterns)])
        )
        model, samples, target = random_setup(0, 10, HeadKind.REGRESSION)
        report = check_gradients(model, samples, target, entries=1)

        assert not report.passed
        assert all(check.checked == 0 for check in report.checks)
        assert all(check.kinks > 0 for check in report.checks)
        with pytest.raises(GradientCheckFailed):
            report.raise_for_failures()

    def test_report(self):
        checks = (TensorCheck("a", 1e-7, 3, 0), TensorCheck("b", 0.5, 3, 1))
        report = GradcheckReport(HeadKind.CLASSIFICATION, checks)

        assert not report.passed
        assert report.failures() == {"b": 0.5}
        assert report.to_dict()["tensors"]["b"]["kinks"] == 1
