import numpy as np
import pytest
from hypothesis import given, strategies as st

from ggh.model import (Gradients, MlpModel, batch_loss, forward_batch, init_model, mean_gradient,
                       minibatches, per_sample_gradients, per_sample_losses, predict, sgd_step)

from oracles import fd_gradients, max_relative_error


def full_grads(model, X, t):
    g = per_sample_gradients(model, X, t)
    return np.stack([np.concatenate([p for w, b in zip(g.weights, g.biases)
                                     for p in (w[i].ravel(), b[i].ravel())])
                     for i in range(len(X))])


def away_from_kinks(model, X, margin=1e-4):
    a = X
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w.T + b
        if np.any(np.abs(z) < margin):
            return False
        a = np.maximum(z, 0)
    return True


def test_init_is_deterministic():
    a, b = init_model([4, 8, 1], 7), init_model([4, 8, 1], 7)
    for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
        assert np.array_equal(wa, wb)


def test_init_shapes():
    m = init_model([5, 16, 1], 0)
    assert [w.shape for w in m.weights] == [(16, 5), (1, 16)]
    assert [b.shape for b in m.biases] == [(16,), (1,)]


@pytest.mark.parametrize("dims", [[4, 1], [4], [4, 0, 1], [4, 8, 0], [4, 8, 2]])
def test_init_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        init_model(dims, 0)


def test_init_is_fan_in_scaled():
    m = init_model([100, 50, 1], 3)
    assert np.abs(m.weights[0]).max() <= 0.1
    assert np.abs(m.weights[1]).max() <= 1 / np.sqrt(50)


def test_zero_network_has_zero_loss_and_gradient():
    m = init_model([3, 4, 1], 0)
    m = m.set_flat(np.zeros(m.n_params))
    out = forward_batch(m, np.ones((2, 3)), np.zeros(2))
    assert np.all(out.losses == 0)
    assert np.all(out.penultimate_grads == 0)


def test_duplicate_rows_share_gradients():
    m = init_model([3, 6, 1], 1)
    X = np.array([[0.2, -1.0, 0.5], [0.2, -1.0, 0.5], [1.0, 0.0, 0.0]])
    out = forward_batch(m, X, [0.3, 0.3, 1.0])
    assert np.array_equal(out.penultimate_grads[0], out.penultimate_grads[1])


def test_forward_batch_rejects_mismatch():
    m = init_model([3, 4, 1], 0)
    with pytest.raises(ValueError):
        forward_batch(m, np.ones((2, 4)), np.zeros(2))
    with pytest.raises(ValueError):
        forward_batch(m, np.ones((2, 3)), np.zeros(3))


def test_frozen_finite_difference_gradients(frozen):
    f = frozen["mlp_121"]
    m = init_model(f["dims"], 0).set_flat(np.array(f["flat"]))
    X, t = np.array(f["x"]), np.array(f["t"])
    assert max_relative_error(full_grads(m, X, t), f["grads"]) < 1e-5


def test_hand_derived_gradient_of_121_network(frozen):
    # x=0.5, hidden pre-activations (0.45, 0.05), output 0.685, target 0.3
    f = frozen["mlp_121"]
    m = init_model(f["dims"], 0).set_flat(np.array(f["flat"]))
    g = full_grads(m, np.array([[0.5]]), np.array([0.3]))[0]
    np.testing.assert_allclose(g, [0.5775, -0.308, 1.155, -0.616, 0.3465, 0.0385, 0.77],
                               rtol=1e-12)


def test_penultimate_block_is_the_last_hidden_transform():
    m = init_model([3, 5, 4, 1], 2)
    rng = np.random.default_rng(0)
    X, t = rng.normal(size=(6, 3)), rng.normal(size=6)
    pg = forward_batch(m, X, t)
    full = per_sample_gradients(m, X, t)
    k = m.penultimate
    assert k == 1
    expect = np.hstack([full.weights[k].reshape(6, -1), full.biases[k]])
    np.testing.assert_array_equal(pg.penultimate_grads, expect)
    assert pg.penultimate_grads.shape[1] == 4 * 5 + 4


@given(seed=st.integers(0, 10_000), hidden=st.lists(st.integers(1, 6), min_size=1, max_size=2),
       n_in=st.integers(1, 4))
def test_gradients_match_finite_differences(seed, hidden, n_in):
    dims = [n_in, *hidden, 1]
    m = init_model(dims, seed)
    rng = np.random.default_rng(seed)
    X, t = rng.normal(size=(3, n_in)), rng.normal(size=3)
    if not away_from_kinks(m, X):
        return
    fd = fd_gradients(dims, m.get_flat(), X, t)
    assert max_relative_error(full_grads(m, X, t), fd) < 1e-5


@given(seed=st.integers(0, 10_000), n=st.integers(1, 20))
def test_losses_sum_to_batch_loss_times_n(seed, n):
    m = init_model([3, 5, 1], seed)
    rng = np.random.default_rng(seed)
    X, t = rng.normal(size=(n, 3)), rng.normal(size=n)
    out = forward_batch(m, X, t)
    assert np.all(out.losses >= 0)
    assert np.isclose(out.losses.sum(), batch_loss(m, X, t) * n, rtol=1e-12)
    np.testing.assert_array_equal(out.losses, per_sample_losses(m, X, t))
    np.testing.assert_array_equal(out.predictions, predict(m, X))


def test_forward_batch_is_pure():
    m = init_model([3, 5, 1], 4)
    before = m.get_flat().copy()
    X, t = np.ones((4, 3)), np.zeros(4)
    a, b = forward_batch(m, X, t), forward_batch(m, X, t)
    np.testing.assert_array_equal(a.penultimate_grads, b.penultimate_grads)
    np.testing.assert_array_equal(m.get_flat(), before)


def test_mean_gradient_is_weighted_mean_of_per_sample():
    m = init_model([2, 3, 1], 5)
    rng = np.random.default_rng(5)
    X, t, w = rng.normal(size=(7, 2)), rng.normal(size=7), rng.uniform(1, 3, 7)
    per = full_grads(m, X, t)
    np.testing.assert_allclose(mean_gradient(m, X, t).flat(), per.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(mean_gradient(m, X, t, weights=w).flat(),
                               (w[:, None] * per).sum(axis=0) / 7, rtol=1e-12)


def _zero_grads(m):
    return Gradients([np.zeros_like(w) for w in m.weights], [np.zeros_like(b) for b in m.biases])


def test_sgd_step_identities():
    m = init_model([3, 4, 1], 0)
    assert np.array_equal(sgd_step(m, _zero_grads(m), 0.1).get_flat(), m.get_flat())
    g = mean_gradient(m, np.ones((2, 3)), np.zeros(2))
    assert np.array_equal(sgd_step(m, g, 0.0).get_flat(), m.get_flat())


def test_sgd_step_hand_arithmetic():
    # hidden unit passes x=1 through, so the output is w*x; loss (w-0)^2, gradient 2w
    m = MlpModel((1, 1, 1), [np.array([[1.0]]), np.array([[1.0]])], [np.zeros(1), np.zeros(1)])
    g = mean_gradient(m, np.array([[1.0]]), np.array([0.0]))
    assert g.weights[1][0, 0] == 2.0
    out = sgd_step(m, g, 0.1)
    assert out.weights[1][0, 0] == pytest.approx(0.8, abs=1e-15)
    assert m.weights[1][0, 0] == 1.0  # input model untouched


def test_sgd_step_rejects_bad_gradients():
    m = init_model([3, 4, 1], 0)
    bad = _zero_grads(m)
    bad.weights[0] = np.zeros((3, 3))
    with pytest.raises(ValueError):
        sgd_step(m, bad, 0.1)
    nan = _zero_grads(m)
    nan.biases[1][0] = np.nan
    with pytest.raises(ValueError):
        sgd_step(m, nan, 0.1)


def test_flat_round_trip():
    m = init_model([3, 4, 2, 1], 9)
    flat = m.get_flat()
    assert flat.size == m.n_params == 3 * 4 + 4 + 4 * 2 + 2 + 2 + 1
    np.testing.assert_array_equal(m.set_flat(flat).get_flat(), flat)


def test_minibatches_cover_every_row_once():
    blocks = minibatches(10, 3, np.random.default_rng(0))
    assert [len(b) for b in blocks] == [3, 3, 3, 1]
    assert sorted(np.concatenate(blocks).tolist()) == list(range(10))
    assert len(minibatches(10, None, np.random.default_rng(0))) == 1
