import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sfnet.errors import ContractError
from sfnet.numeric import Tape, backward, cross_entropy, matmul, softmax, tanh_forward


def triple_loop(a, b):
    n, m = a.shape
    _, p = b.shape
    out = np.zeros((n, p))
    for i in range(n):
        for j in range(p):
            s = 0.0
            for t in range(m):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def test_matmul_identity(rng):
    m = rng.normal(size=(3, 3))
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_example():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(5, 4)), rng.normal(size=(4, 3))
    assert np.max(np.abs(matmul(a, b) - triple_loop(a, b))) < 1e-12


def test_matmul_dimension_mismatch():
    with pytest.raises(ContractError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_tanh_examples():
    assert tanh_forward(0.0) == 0.0
    x = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(tanh_forward(-x), -tanh_forward(x))
    assert tanh_forward(1000.0) == 1.0


@pytest.mark.parametrize("c", [-7.0, 0.0, 3.5, 1e3])
def test_softmax_constant_is_uniform(c):
    np.testing.assert_allclose(softmax([c] * 5), [0.2] * 5, atol=1e-15)


def test_softmax_stable_for_large_logits():
    p = softmax([1000.0, 0.0])
    assert not np.any(np.isnan(p))
    assert p[0] == 1.0 and p[1] < 1e-300


def test_softmax_forced_arithmetic():
    np.testing.assert_allclose(softmax(np.log([1.0, 2.0, 3.0])), [1 / 6, 2 / 6, 3 / 6], rtol=1e-14)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 8)),
              elements=st.floats(-1e3, 1e3)))
def test_softmax_on_simplex(z):
    p = softmax(z)
    assert np.all(p >= 0)
    assert np.all(np.abs(p.sum(axis=1) - 1.0) <= 1e-12)


def test_cross_entropy_examples():
    assert cross_entropy([1 / 3] * 3, 2) == pytest.approx(np.log(3), abs=1e-12)
    assert cross_entropy([0.0, 1.0], 1) == 0.0
    assert cross_entropy([0.7, 0.3], 1) == pytest.approx(1.2039728043259361, abs=1e-12)
    assert cross_entropy([1.0, 0.0], 1) == pytest.approx(-np.log(1e-12))
    with pytest.raises(ContractError):
        cross_entropy([0.5, 0.5], 2)


def test_backward_constant_loss_gives_zero_grad():
    tape = Tape()
    w = tape.param("w", np.array([[2.0]]))
    u = tape.param("u", np.array([[1.0]]))
    loss = tape.sum_squares(u)
    grads = backward(tape, loss)
    assert np.all(grads["w"] == 0.0)
    assert grads["u"][0, 0] == 2.0
    assert w.value.shape == grads["w"].shape


def test_backward_rejects_foreign_loss():
    t1, t2 = Tape(), Tape()
    x = t1.param("x", np.ones((1, 1)))
    loss = t1.sum_squares(x)
    with pytest.raises(ContractError):
        backward(t2, loss)


def test_scalar_chain_against_finite_differences():
    def f(w, x=1.5):
        return float(np.tanh(w * x))

    tape = Tape()
    w = tape.param("w", np.array([[0.3]]))
    x = tape.constant(np.array([[1.5]]))
    y = tape.tanh(tape.matmul(w, x))
    loss = tape.sum_squares(y)  # y^2, chain through tanh
    g = backward(tape, loss)["w"][0, 0]
    h = 1e-5
    numeric = (f(0.3 + h) ** 2 - f(0.3 - h) ** 2) / (2 * h)
    assert abs(g - numeric) / abs(numeric) < 1e-6

    # and the bare tanh(w x) derivative
    tape = Tape()
    w = tape.param("w", np.array([[0.3]]))
    y = tape.tanh(tape.matmul(w, tape.constant(np.array([[1.5]]))))
    loss = tape.mean(y)
    g = backward(tape, loss)["w"][0, 0]
    numeric = (f(0.3 + h) - f(0.3 - h)) / (2 * h)
    assert abs(g - numeric) / abs(numeric) < 1e-6


def _composite_loss(tape, params, idx, targets):
    emb = tape.param("emb", params["emb"])
    w1 = tape.param("w1", params["w1"])
    b1 = tape.param("b1", params["b1"])
    p1 = tape.param("p1", params["p1"])
    w2 = tape.param("w2", params["w2"])
    h = tape.concat([tape.gather(emb, idx), tape.constant(np.ones((len(idx), 1)))])
    z = tape.add(tape.tanh(tape.add_bias(tape.matmul(h, w1), b1)), tape.matmul(h, p1))
    probs = tape.softmax(tape.matmul(z, w2))
    ce = tape.mean(tape.cross_entropy(probs, targets))
    return tape.add(ce, tape.scale(tape.sum_squares(tape.gather(emb, np.unique(idx))), 0.1))


def test_composite_graph_finite_differences(rng):
    params = {
        "emb": rng.normal(size=(6, 3)),
        "w1": rng.normal(size=(4, 5)),
        "b1": rng.normal(size=5),
        "p1": rng.normal(size=(4, 5)),
        "w2": rng.normal(size=(5, 3)),
    }
    idx = np.array([0, 2, 2, 5])
    targets = np.array([0, 1, 2, 1])
    tape = Tape()
    grads = backward(tape, _composite_loss(tape, params, idx, targets))

    def value(ps):
        t = Tape()
        return float(_composite_loss(t, ps, idx, targets).value)

    h = 1e-5
    for name, arr in params.items():
        for pos in np.ndindex(arr.shape):
            plus = {k: v.copy() for k, v in params.items()}
            minus = {k: v.copy() for k, v in params.items()}
            plus[name][pos] += h
            minus[name][pos] -= h
            num = (value(plus) - value(minus)) / (2 * h)
            ana = grads[name][pos]
            assert abs(ana - num) <= 1e-4 * max(abs(ana), abs(num), 1e-6), (name, pos, ana, num)


def test_backward_is_deterministic(rng):
    params = {
        "emb": rng.normal(size=(6, 3)),
        "w1": rng.normal(size=(4, 5)),
        "b1": rng.normal(size=5),
        "p1": rng.normal(size=(4, 5)),
        "w2": rng.normal(size=(5, 3)),
    }
    idx, targets = np.array([1, 1, 3]), np.array([2, 0, 1])
    runs = []
    for _ in range(2):
        tape = Tape()
        loss = _composite_loss(tape, params, idx, targets)
        runs.append((loss.value.tobytes(), {k: g.tobytes() for k, g in backward(tape, loss).items()}))
    assert runs[0] == runs[1]


def test_gather_rejects_out_of_range():
    tape = Tape()
    t = tape.param("t", np.zeros((3, 2)))
    with pytest.raises(ContractError):
        tape.gather(t, np.array([3]))
