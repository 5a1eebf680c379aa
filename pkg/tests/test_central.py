import numpy as np
import pytest

from fd import numeric_grad, rel_err
from fedvs.central import CentralModel
from fedvs.errors import LabelMismatch, ShapeMismatch


def test_uniform_softmax_gives_log_classes(rng):
    for C in (2, 3, 7):
        m = CentralModel.init(4, (5,), C, rng)
        m.weights[-1][:] = 0.0
        H = rng.normal(size=(6, 4))
        assert m.loss(H, rng.integers(0, C, 6)) == pytest.approx(np.log(C), abs=1e-12)


@pytest.mark.parametrize("task,out", [("classification", 3), ("regression", 2)])
def test_finite_differences(rng, task, out):
    m = CentralModel.init(4, (5, 3), out, rng, task)
    for b in m.biases:
        b[:] = rng.uniform(-0.5, 0.5, b.shape)
    H = rng.normal(size=(3, 4))
    y = rng.integers(0, out, 3) if task == "classification" else rng.normal(size=(3, out))
    loss, gH, (gW, gb) = m.loss_and_grads(H, y)

    assert rel_err(gH, numeric_grad(lambda: m.loss(H, y), H)) < 1e-5
    for j in range(3):
        assert rel_err(gW[j], numeric_grad(lambda: m.loss(H, y), m.weights[j])) < 1e-5
        assert rel_err(gb[j], numeric_grad(lambda: m.loss(H, y), m.biases[j])) < 1e-5


def test_linear_mse_closed_form():
    W = np.array([[1.0], [2.0]])
    m = CentralModel([W.copy()], [np.zeros(1)], "regression")
    h = np.array([[3.0, -1.0]])
    y = np.array([[0.5]])
    loss, gH, (gW, gb) = m.loss_and_grads(h, y)
    r = (h @ W - y)[0, 0]  # 1 - 0.5
    assert loss == pytest.approx(r**2)
    assert np.allclose(gW[0], 2 * r * h.T)
    assert np.allclose(gb[0], [2 * r])
    assert np.allclose(gH, 2 * r * W.T)


def test_mask_removes_rows(rng):
    m = CentralModel.init(3, (4,), 2, rng)
    H = rng.normal(size=(5, 3))
    y = np.array([0, 1, 1, 0, 1])
    mask = np.array([True, True, False, True, False])
    loss, gH, _ = m.loss_and_grads(H, y, mask)
    assert loss == pytest.approx(m.loss(H[mask], y[mask]))
    assert np.all(gH[~mask] == 0)


def test_checks(rng):
    m = CentralModel.init(3, (), 2, rng)
    with pytest.raises(ShapeMismatch):
        m.forward(np.zeros((2, 4)))
    with pytest.raises(LabelMismatch):
        m.loss(np.zeros((2, 3)), np.array([0]))
    with pytest.raises(LabelMismatch):
        m.loss(np.zeros((2, 3)), np.array([0, 2]))
    with pytest.raises(LabelMismatch):
        m.loss(np.zeros((2, 3)), np.array([0, 1]), np.zeros(2, dtype=bool))


def test_gradient_step_descends(rng):
    m = CentralModel.init(4, (8,), 3, rng)
    H = rng.normal(size=(20, 4))
    y = rng.integers(0, 3, 20)
    before = m.loss(H, y)
    for _ in range(20):
        _, _, grads = m.loss_and_grads(H, y)
        m.apply(grads, 0.1)
    assert m.loss(H, y) < before
