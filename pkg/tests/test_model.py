import math

import numpy as np
import pytest

from leanfed import _kernels_py
from leanfed import model as M
from leanfed.data import Dataset, generate_synthetic
from leanfed.errors import ConfigError, NumericError

from .conftest import _kernels_c
from .gradcheck import central_differences, max_relative_error, random_instance, reference_loss


def test_init_params_shapes():
    assert M.init_params(2, 3).weights.tolist() == np.zeros((2, 4)).tolist()
    p = M.init_params(10, 32)
    assert p.weights.shape == (10, 33) and not p.weights.any()
    assert (p.num_classes, p.dim) == (10, 32)


def test_init_params_rejects_bad_shape():
    with pytest.raises(ConfigError):
        M.init_params(1, 3)


def test_zero_model_is_chance_on_balanced_test(backend):
    _, test = generate_synthetic(4, 3, 8, 400, 2.0, seed=0)
    # all logits tie, so every prediction is class 0
    assert M.evaluate(M.init_params(4, 3), test, backend) == pytest.approx(0.25)


def test_zero_model_loss_is_log_classes(backend, rng):
    for C in (2, 3, 10):
        X = rng.normal(size=(7, 4))
        y = rng.integers(0, C, 7)
        loss, _ = M.loss_and_grad(M.init_params(C, 4), X, y, 0.0, backend)
        assert loss == pytest.approx(math.log(C), rel=1e-14)


def test_single_sample_gradient(backend):
    loss, grad = M.loss_and_grad(M.init_params(2, 1), [[1.0]], [0], 0.0, backend)
    np.testing.assert_allclose(grad, [[-0.5, -0.5], [0.5, 0.5]], rtol=0, atol=1e-15)


def test_gradient_matches_finite_differences(backend):
    rng = np.random.default_rng(7)
    for _ in range(25):
        W, X, y, wd = random_instance(rng)
        loss, grad = backend.loss_and_grad(W, X, y, wd)
        assert loss == pytest.approx(reference_loss(W, X, y, wd), rel=1e-12)
        assert max_relative_error(grad, central_differences(W, X, y, wd)) < 1e-5


def test_loss_stable_for_large_norms(backend, rng):
    W = rng.normal(size=(5, 4))
    W *= 1e3 / np.linalg.norm(W)
    X = rng.normal(size=(16, 3))
    X *= 1e3 / np.linalg.norm(X, axis=1, keepdims=True)
    loss, grad = M.loss_and_grad(M.ModelParams(W), X, rng.integers(0, 5, 16), 1e-4, backend)
    assert math.isfinite(loss) and np.all(np.isfinite(grad))


def test_nonfinite_features_rejected():
    with pytest.raises(NumericError):
        M.loss_and_grad(M.init_params(2, 2), [[np.nan, 0.0]], [0])


def test_zero_learning_rate_is_identity(backend, small_data):
    train, _ = small_data
    start = M.ModelParams(np.random.default_rng(0).normal(size=(4, 7)))
    out = M.sgd_epoch(start, train.features, train.labels, M.TrainConfig(learning_rate=0.0),
                      np.random.default_rng(1), backend)
    assert out.weights.tobytes() == start.weights.tobytes()


def test_full_batch_epoch_is_one_step(backend, small_data):
    train, _ = small_data
    cfg = M.TrainConfig(learning_rate=0.3, batch_size=train.n, weight_decay=1e-3)
    start = M.ModelParams(np.random.default_rng(0).normal(size=(4, 7)))
    out = M.sgd_epoch(start, train.features, train.labels, cfg, np.random.default_rng(1), backend)
    _, grad = M.loss_and_grad(start, train.features, train.labels, 1e-3, backend)
    np.testing.assert_allclose(out.weights, start.weights - 0.3 * grad, rtol=1e-12, atol=1e-13)


def test_epoch_does_not_mutate_input(small_data):
    train, _ = small_data
    start = M.init_params(4, 6)
    M.sgd_epoch(start, train.features, train.labels, M.TrainConfig(), np.random.default_rng(0))
    assert not start.weights.any()


def test_epoch_determinism(backend, small_data):
    train, _ = small_data
    runs = [
        M.sgd_epoch(M.init_params(4, 6), train.features, train.labels, M.TrainConfig(),
                    np.random.default_rng(5), backend).weights.tobytes()
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


def test_separable_two_class_converges(backend):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int64)
    X += np.where(y[:, None] == 1, 0.3, -0.3)  # open a margin
    params = M.init_params(2, 2)
    for _ in range(30):
        params = M.sgd_epoch(params, X, y, M.TrainConfig(), rng, backend)
    assert M.evaluate(params, Dataset(X, y, 2), backend) >= 0.99


def test_training_loss_mostly_decreases():
    good = total = 0
    for seed in range(20):
        train, _ = generate_synthetic(10, 32, 1000, 10, 2.5, seed=seed)
        rng = np.random.default_rng(seed)
        params = M.init_params(10, 32)
        prev, _ = M.loss_and_grad(params, train.features, train.labels, 1e-4)
        for _ in range(10):
            params = M.sgd_epoch(params, train.features, train.labels, M.TrainConfig(), rng)
            cur, _ = M.loss_and_grad(params, train.features, train.labels, 1e-4)
            good += cur <= prev
            total += 1
            prev = cur
    assert good / total >= 0.95


def test_evaluate_ties_go_to_class_zero(backend):
    ds = Dataset(np.random.default_rng(0).normal(size=(9, 3)), np.zeros(9, dtype=np.int64), 3)
    assert M.evaluate(M.init_params(3, 3), ds, backend) == 1.0


def test_accuracy_invariant_to_row_shift(backend, small_data):
    train, test = small_data
    params = M.init_params(4, 6)
    rng = np.random.default_rng(0)
    for _ in range(3):
        params = M.sgd_epoch(params, train.features, train.labels, M.TrainConfig(), rng, backend)
    shifted = M.ModelParams(params.weights + 0.25)
    assert M.evaluate(shifted, test, backend) == M.evaluate(params, test, backend)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
def test_backends_agree(small_data):
    train, _ = small_data
    rng = np.random.default_rng(3)
    for _ in range(20):
        W, X, y, wd = random_instance(rng)
        l1, g1 = _kernels_py.loss_and_grad(W, X, y, wd)
        l2, g2 = _kernels_c.loss_and_grad(W, X, y, wd)
        assert l1 == pytest.approx(l2, rel=1e-12)
        np.testing.assert_allclose(g1, g2, rtol=1e-10, atol=1e-13)
    outs = [
        M.sgd_epoch(M.init_params(4, 6), train.features, train.labels, M.TrainConfig(),
                    np.random.default_rng(9), b).weights
        for b in (_kernels_py, _kernels_c)
    ]
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-9, atol=1e-12)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("LEANFED_BACKEND", "python")
    assert M.load_backend() is _kernels_py
    assert M.load_backend("python") is _kernels_py
