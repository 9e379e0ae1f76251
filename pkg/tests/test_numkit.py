import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlkd.numkit import (
    NEG_INF,
    Adam,
    Linear,
    TensorFormatError,
    Tensor,
    TransformerLayer,
    adam_update,
    dumps_named,
    feed_forward,
    grad_check,
    loads_named,
    multi_head_attention,
    no_grad,
    ops,
)


def leaf(a):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=True)


# ---------------------------------------------------------------- primitives


def test_masked_softmax_single_survivor():
    lp = ops.masked_log_softmax(Tensor(np.array([[0.0, 0.0]])), np.array([[0.0, NEG_INF]]))
    assert np.array_equal(np.exp(lp.data), [[1.0, 0.0]])


def test_attention_single_key_returns_value():
    eye = Tensor(np.eye(3))
    q = Tensor(np.random.default_rng(0).normal(size=(1, 2, 3)))
    kv = Tensor(np.array([[[0.3, -1.0, 2.0]]]))
    out = multi_head_attention(q, kv, None, 1, eye, eye, eye, eye)
    assert np.allclose(out.data, [[[0.3, -1.0, 2.0], [0.3, -1.0, 2.0]]])


def test_attention_zero_mask_equals_unmasked():
    rng = np.random.default_rng(1)
    W = [Tensor(rng.normal(size=(4, 4))) for _ in range(4)]
    x = Tensor(rng.normal(size=(2, 5, 4)))
    a = multi_head_attention(x, x, None, 2, *W)
    b = multi_head_attention(x, x, np.zeros((2, 5, 5)), 2, *W)
    assert np.array_equal(a.data, b.data)


def test_attention_all_masked_row_rejected():
    rng = np.random.default_rng(1)
    W = [Tensor(rng.normal(size=(4, 4))) for _ in range(4)]
    x = Tensor(rng.normal(size=(1, 2, 4)))
    with pytest.raises(ValueError):
        multi_head_attention(x, x, np.full((1, 2, 2), NEG_INF), 2, *W)


def test_feed_forward_by_hand():
    x = np.array([[1.0, -2.0, 0.5], [0.0, 1.0, -1.0]])
    W1 = np.array([[1.0, 0.0], [0.5, -1.0], [2.0, 1.0]])
    b1 = np.array([0.1, -0.2])
    W2 = np.array([[1.0, 2.0, -1.0], [0.0, 1.0, 1.0]])
    b2 = np.array([0.0, 0.5, -0.5])
    # hidden pre-activations: row0 = [1 - 1 + 1 + 0.1, 0 + 2 + 0.5 - 0.2] = [1.1, 2.3]
    #                         row1 = [0 + 0.5 - 2 + 0.1, 0 - 1 - 1 - 0.2] = [-1.4, -2.2] -> relu 0
    expected = np.array([[1.1, 2.2 + 2.3 + 0.5, -1.1 + 2.3 - 0.5], [0.0, 0.5, -0.5]])
    out = feed_forward(*(Tensor(a) for a in (x, W1, b1, W2, b2)))
    assert np.allclose(out.data, expected)


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_all_masked_softmax_row_rejected():
    with pytest.raises(ValueError):
        ops.masked_log_softmax(Tensor(np.zeros((1, 3))), np.zeros((1, 3), dtype=bool))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12))
def test_masked_probabilities_sum_to_one_and_zero_on_masked(seed, n):
    rng = np.random.default_rng(seed)
    logits = Tensor(rng.normal(scale=5, size=(3, n)))
    allowed = rng.random((3, n)) < 0.5
    allowed[:, rng.integers(n)] = True
    p = np.exp(ops.masked_log_softmax(logits, allowed).data)
    assert np.all(p[~allowed] == 0.0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


# ---------------------------------------------------------------- backward


def test_product_gradient():
    x, y = leaf(2.0), leaf(3.0)
    ops.mul(x, y).backward()
    assert x.grad == 3.0 and y.grad == 2.0


def test_backward_requires_scalar():
    x = leaf(np.ones(3))
    with pytest.raises(ValueError):
        ops.scale(x, 2.0).backward()


def test_masked_entries_get_zero_gradient():
    logits = leaf(np.array([[0.3, -1.0, 2.0, 0.1]]))
    allowed = np.array([[True, False, True, False]])
    lp = ops.masked_log_softmax(logits, allowed)
    ops.masked_sum(lp, allowed, weights=np.array([[0.7, 0.0, 0.3, 0.0]])).backward()
    assert np.all(logits.grad[~allowed] == 0.0)
    assert np.any(logits.grad[allowed] != 0.0)


def test_concat_backward_splits_exactly():
    a, b = leaf(np.ones((2, 3))), leaf(np.ones((2, 2)))
    g = np.random.default_rng(0).normal(size=(2, 5))
    out = ops.concat([a, b], axis=-1)
    ops.sum(ops.mul(out, g)).backward()
    assert np.array_equal(np.concatenate([a.grad, b.grad], axis=-1), g)
    assert np.linalg.norm(a.grad) ** 2 + np.linalg.norm(b.grad) ** 2 == pytest.approx(np.linalg.norm(g) ** 2)


def test_non_participating_parameter_gets_zero():
    lin = Linear(3, 2, np.random.default_rng(0))
    unused = Linear(3, 2, np.random.default_rng(1))
    for m in (lin, unused):
        m.zero_grad()
    ops.sum(lin(Tensor(np.ones((1, 3))))).backward()
    assert all(np.all(p.grad == 0) for p in unused.parameters())


def test_no_grad_builds_no_graph():
    x = leaf(np.ones(2))
    with no_grad():
        y = ops.scale(x, 3.0)
    assert not y.requires_grad


def test_quadratic_form_grad_check_exact():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = leaf([[0.3], [-0.7]])
    err = grad_check(lambda: ops.sum(ops.mul(x, ops.matmul(Tensor(A), x))), [x])
    assert err < 1e-9


def test_three_layer_network_grad_check():
    rng = np.random.default_rng(3)
    layers = [Linear(4, 6, rng), Linear(6, 5, rng), Linear(5, 1, rng)]
    x = Tensor(rng.normal(size=(7, 4)))

    def f():
        h = ops.tanh(layers[0](x))
        h = ops.relu(layers[1](h))
        return ops.mean(layers[2](h))

    params = [p for layer in layers for p in layer.parameters()]
    assert grad_check(f, params) < 1e-4


@pytest.mark.parametrize("d", [8, 16])
@pytest.mark.parametrize("norm", [True, False])
def test_transformer_layer_grad_check(d, norm):
    rng = np.random.default_rng(d)
    layer = TransformerLayer(d, 2, 2 * d, rng, norm=norm)
    x = Tensor(rng.normal(size=(2, 4, d)))
    allowed = np.ones((2, 4, 4), dtype=bool)
    allowed[1, :, 3] = False
    mask = np.where(allowed, 0.0, NEG_INF)
    w = rng.normal(size=(2, 4, d))
    err = grad_check(lambda: ops.sum(ops.mul(layer(x, mask), w)), layer.parameters(), max_entries=12, rng=rng)
    assert err < 1e-4


def test_transformer_layer_without_norm_has_no_norm_parameters():
    layer = TransformerLayer(8, 2, 16, np.random.default_rng(0), norm=False)
    assert not any("norm" in name for name in layer.named_parameters())


# ---------------------------------------------------------------- Adam


def test_adam_zero_gradient_keeps_params():
    p = [np.array([1.0, -2.0])]
    z = [np.zeros(2)]
    new, _, _ = adam_update(p, z, z, z, 1e-3, 0.9, 0.999, 1e-8, 1)
    assert np.array_equal(new[0], p[0])


def test_adam_first_step_size():
    new, _, _ = adam_update([np.array([0.5])], [np.array([1.0])], [np.zeros(1)], [np.zeros(1)], 1e-4, 0.9, 0.999, 1e-8, 1)
    assert new[0][0] - 0.5 == pytest.approx(-1e-4, rel=1e-6)


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_update([np.zeros(2)], [np.zeros(3)], [np.zeros(2)], [np.zeros(2)], 1e-3, 0.9, 0.999, 1e-8, 1)


def test_adam_deterministic():
    def run():
        rng = np.random.default_rng(0)
        lin = Linear(3, 1, rng)
        opt = Adam(lin.parameters(), lr=1e-2)
        x = Tensor(rng.normal(size=(5, 3)))
        for _ in range(10):
            lin.zero_grad()
            ops.mean(ops.mul(lin(x), lin(x))).backward()
            opt.step()
        return [p.data.copy() for p in lin.parameters()]

    assert all(np.array_equal(a, b) for a, b in zip(run(), run()))


# ---------------------------------------------------------------- serialization


def test_named_tensor_round_trip_and_truncation():
    t = {"a": np.arange(6.0).reshape(2, 3), "b.c": np.array([1.5]), "s": np.array(2.0)}
    buf = dumps_named(t)
    back, end = loads_named(buf)
    assert end == len(buf)
    assert all(np.array_equal(t[k], back[k]) for k in t)
    with pytest.raises(TensorFormatError):
        loads_named(buf[:-3])
