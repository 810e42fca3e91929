"""张量引擎: 算子梯度、反向传播、优化器与检查点"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edaffect.core.errors import (
    BadLabel,
    BadParams,
    DetachedLoss,
    MissingGrad,
    NonFinite,
    NotNormalized,
    ShapeMismatch,
)
from edaffect.rtcan.model import RtcanModel
from edaffect.rtcan.network import model_forward
from edaffect.tensor import ops
from edaffect.tensor.checkpoint import (
    Checkpoint,
    dumps_checkpoint,
    load_checkpoint,
    loads_checkpoint,
    save_checkpoint,
)
from edaffect.tensor.gradcheck import finite_diff_check
from edaffect.tensor.optim import learning_rate, sgd_step
from edaffect.tensor.tensor import Tape, Tensor, backward

SEEDS = range(20)
TOL = 1e-4


def _away_from_zero(a: np.ndarray) -> np.ndarray:
    return a + np.sign(a) * 0.1


def _cases(rng):
    """(名字, 被检查的输入, f(x) → 输出张量)"""
    w3 = Tensor(rng.normal(size=(4, 3, 3)))
    b4 = Tensor(rng.normal(size=4))
    dense_w = Tensor(rng.normal(size=(5, 3)))
    dense_b = Tensor(rng.normal(size=3))
    gamma = Tensor(rng.normal(size=3) + 1.0)
    beta = Tensor(rng.normal(size=3))
    other = Tensor(rng.normal(size=(2, 4, 3)))
    weights = Tensor(rng.uniform(0.1, 1.0, size=(2, 3)))
    x3 = rng.normal(size=(2, 3, 9))
    x45 = Tensor(rng.normal(size=(4, 5)))
    return [
        ("conv1d_x", x3, lambda x: ops.conv1d(x, w3, b4, stride=2, pad=1)),
        ("conv1d_w", rng.normal(size=(4, 3, 3)),
         lambda w: ops.conv1d(Tensor(x3), w, b4, stride=1, pad=2)),
        ("avgpool1d", x3, lambda x: ops.avgpool1d(x, 3, 2)),
        ("global_pool", x3, lambda x: ops.avgpool1d(x, 9, 9)),
        ("batchnorm_train", x3, lambda x: ops.batchnorm1d(x, gamma, beta, None, training=True)),
        ("dense_x", rng.normal(size=(4, 5)), lambda x: ops.dense(x, dense_w, dense_b)),
        ("dense_w", rng.normal(size=(5, 3)),
         lambda w: ops.dense(x45, w, dense_b)),
        ("matmul_batched", rng.normal(size=(2, 3, 4)), lambda a: ops.matmul_batched(a, other)),
        ("relu", _away_from_zero(rng.normal(size=(3, 4))), ops.relu),
        ("sigmoid", rng.normal(size=(3, 4)), ops.sigmoid),
        ("softmax", rng.normal(size=(3, 4)), ops.softmax),
        ("concat", rng.normal(size=(2, 3, 2)),
         lambda x: ops.concat([x, Tensor(np.ones((2, 3, 4))), x], dim=2)),
        ("slice_axis", x3, lambda x: ops.slice_axis(x, 2, 3, 6)),
        ("transpose", x3, lambda x: ops.transpose(x, (0, 2, 1))),
        ("reshape", x3, lambda x: ops.reshape(x, (6, 9))),
        ("channel_scale_x", x3, lambda x: ops.channel_scale(x, weights)),
        ("channel_scale_w", rng.normal(size=(2, 3)),
         lambda w: ops.channel_scale(Tensor(x3), w)),
        ("scale", x3, lambda x: ops.scale(x, -2.5)),
    ]


@pytest.mark.parametrize("seed", SEEDS)
def test_operator_gradients(seed):
    rng = np.random.default_rng(seed)
    for name, data, fn in _cases(rng):
        projection_rng = np.random.default_rng(seed + 1000)
        projection = None

        def f(x):
            nonlocal projection
            out = fn(x)
            if projection is None:
                projection = Tensor(projection_rng.normal(size=out.shape))
            return ops.sum_all(ops.mul(out, projection))

        err = finite_diff_check(f, Tensor(data), eps=1e-5)
        assert err <= TOL, f"{name}: {err}"


@pytest.mark.parametrize("seed", SEEDS)
def test_cross_entropy_gradient_through_softmax(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=5)
    err = finite_diff_check(lambda z: ops.cross_entropy(ops.softmax(z), labels),
                            Tensor(rng.normal(size=(5, 3))), eps=1e-5)
    assert err <= TOL


def _train_mode_model(tiny_config, seed):
    model = RtcanModel(tiny_config(), seed=seed)
    model["rnta.bn.gamma"].data[:] = 0.5
    return model


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("name", ["rnta.theta.w", "sca.fc0.w", "stem.conv.b"])
def test_network_parameter_gradients(tiny_config, seed, name):
    model = _train_mode_model(tiny_config, seed)
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(size=(4, 3, 24)))
    labels = np.array([0, 1, 0, 1])
    err = finite_diff_check(
        lambda _: ops.cross_entropy(model_forward(x, None, model), labels), model[name], eps=1e-6
    )
    assert err <= 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_network_input_gradient(tiny_config, seed):
    model = _train_mode_model(tiny_config, seed)
    rng = np.random.default_rng(seed)
    labels = np.array([1, 0, 1, 0])
    err = finite_diff_check(
        lambda x: ops.cross_entropy(model_forward(x, None, model), labels),
        Tensor(rng.normal(size=(4, 3, 24))), eps=1e-6,
    )
    assert err <= 1e-3


def test_conv1d_matches_direct_loop():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 10))
    w = rng.normal(size=(4, 3, 3))
    b = rng.normal(size=4)
    out = ops.conv1d(Tensor(x), Tensor(w), Tensor(b), stride=2, pad=1).data
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1)))
    expected = np.zeros((2, 4, 5))
    for i in range(5):
        window = xp[:, :, 2 * i:2 * i + 3]
        expected[:, :, i] = np.einsum("bck,ock->bo", window, w) + b
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_fan_out_accumulates():
    x = Tensor([1.5, -2.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.add(ops.mul(x, x), x))
    backward(tape, loss)
    np.testing.assert_allclose(x.grad, 2 * x.data + 1)


def test_no_tape_no_record():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = ops.relu(x)
    with Tape() as tape:
        pass
    assert len(tape) == 0
    with pytest.raises(DetachedLoss):
        backward(tape, ops.sum_all(y))


def test_detached_loss():
    with Tape() as tape:
        ops.sum_all(Tensor([1.0], requires_grad=True))
    with pytest.raises(DetachedLoss):
        backward(tape, Tensor(3.0))


def test_shape_mismatch_and_nonfinite():
    with pytest.raises(ShapeMismatch):
        ops.add(Tensor(np.zeros(3)), Tensor(np.zeros(4)))
    with pytest.raises(ShapeMismatch):
        ops.dense(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))), Tensor(np.zeros(2)))
    with pytest.raises(NonFinite):
        ops.scale(Tensor([1e308]), 10.0)


def test_cross_entropy_clamp_and_errors():
    probs = Tensor([[0.0, 1.0]], requires_grad=True)
    with Tape() as tape:
        loss = ops.cross_entropy(probs, np.array([0]))
    assert loss.item() == pytest.approx(-np.log(1e-12))
    assert loss.item() == pytest.approx(27.631021, rel=1e-6)
    backward(tape, loss)
    np.testing.assert_array_equal(probs.grad, np.zeros((1, 2)))

    with pytest.raises(NotNormalized):
        ops.cross_entropy(Tensor([[0.5, 0.6]]), np.array([0]))
    with pytest.raises(BadLabel):
        ops.cross_entropy(Tensor([[0.5, 0.5]]), np.array([2]))
    with pytest.raises(BadLabel):
        ops.cross_entropy(Tensor([[0.5, 0.5]]), np.array([0.5]))


def test_sgd_step_and_missing_grad():
    a = Tensor([1.0, 2.0], requires_grad=True)
    a.grad = np.array([1.0, -1.0])
    sgd_step([a], 0.5)
    np.testing.assert_array_equal(a.data, [0.5, 2.5])
    np.testing.assert_array_equal(a.grad, [0.0, 0.0])

    b = Tensor([3.0], requires_grad=True)
    a.grad = np.array([1.0, 1.0])
    with pytest.raises(MissingGrad):
        sgd_step([a, b], 0.1)
    np.testing.assert_array_equal(a.data, [0.5, 2.5])


def test_zero_lr_keeps_parameters():
    a = Tensor([1.0, 2.0], requires_grad=True)
    a.grad = np.array([5.0, 5.0])
    sgd_step([a], 0.0)
    np.testing.assert_array_equal(a.data, [1.0, 2.0])


def test_step_decay_schedule():
    assert learning_rate(0, 1e-3, 0.9, 15) == pytest.approx(0.001)
    assert learning_rate(14, 1e-3, 0.9, 15) == pytest.approx(0.001)
    assert learning_rate(15, 1e-3, 0.9, 15) == pytest.approx(0.0009)
    assert learning_rate(30, 1e-3, 0.9, 15) == pytest.approx(0.00081)


def test_gradcheck_rejects_bad_eps():
    for eps in (0.0, 0.1):
        with pytest.raises(BadParams):
            finite_diff_check(ops.sum_all, Tensor([1.0]), eps=eps)


def test_checkpoint_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    ckpt = Checkpoint(
        config={"rtcan": {"input_len": 24}, "note": "测试"},
        parameters={
            "w": rng.normal(size=(3, 2, 4)),
            "tiny": np.array([0.1 + 0.2, 1e-300, -0.0, 5e-324]),
        },
        buffers={"bn.running_var": rng.uniform(size=5)},
    )
    for back in (loads_checkpoint(dumps_checkpoint(ckpt)),
                 load_checkpoint(save_checkpoint(ckpt, tmp_path / "m.ckpt"))):
        assert back.config == ckpt.config
        for name, arr in ckpt.parameters.items():
            assert back.parameters[name].shape == arr.shape
            assert back.parameters[name].tobytes() == arr.tobytes()
        assert back.buffers["bn.running_var"].tobytes() == ckpt.buffers["bn.running_var"].tobytes()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 6)),
              elements=st.floats(-50.0, 50.0)))
def test_softmax_rows_sum_to_one(values):
    out = ops.softmax(Tensor(values)).data
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)


def test_conv1d_small_example():
    x = Tensor(np.array([[[1.0, 2.0, 3.0]]]))
    w = Tensor(np.array([[[1.0, 0.0, -1.0]]]))
    out = ops.conv1d(x, w, Tensor(np.zeros(1)), stride=1, pad=1)
    np.testing.assert_array_equal(out.data, [[[-2.0, -2.0, 2.0]]])
