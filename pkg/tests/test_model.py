"""Discriminant model evaluation, derivatives, scaling, and serialization."""

import numpy as np
import pytest

from inmargin.kernels import KernelSpec
from inmargin.model import DiscriminantModel

LINEAR = KernelSpec(family="linear")
RBF = KernelSpec(family="gaussian_rbf", sigma_sq=1.0)


def random_model(rng, kernel, nc=4, m=2, with_b=True):
    return DiscriminantModel(
        kernel=kernel,
        centers=rng.uniform(-1.5, 1.5, size=(nc, m)),
        a=rng.standard_normal(nc),
        b=rng.standard_normal((nc, m)) * (1.0 if with_b else 0.0),
        f0=float(rng.standard_normal()),
    )


def test_empty_expansion_is_constant():
    model = DiscriminantModel(
        kernel=RBF, centers=np.zeros((1, 2)), a=np.zeros(1), b=np.zeros((1, 2)), f0=0.7
    )
    assert model.eval_f([3.0, -1.0]) == pytest.approx(0.7, abs=1e-15)
    assert model.eval_f([0.0, 0.0]) == pytest.approx(0.7, abs=1e-15)


def test_linear_kernel_center_at_origin():
    model = DiscriminantModel(
        kernel=LINEAR, centers=np.zeros((1, 2)), a=np.ones(1), b=np.zeros((1, 2)), f0=0.0
    )
    assert model.eval_f([2.0, 3.0]) == pytest.approx(0.0, abs=1e-15)


def test_linear_kernel_b_term():
    # d k(c, x) / dc = x for the linear kernel, so the b-term reads b . x
    model = DiscriminantModel(
        kernel=LINEAR,
        centers=np.array([[1.0, 1.0]]),
        a=np.zeros(1),
        b=np.array([[2.0, 0.0]]),
        f0=1.0,
    )
    assert model.eval_f([5.0, 7.0]) == pytest.approx(11.0, abs=1e-12)


def test_linear_kernel_gradient_is_center():
    model = DiscriminantModel(
        kernel=LINEAR,
        centers=np.array([[0.3, -1.2]]),
        a=np.ones(1),
        b=np.zeros((1, 2)),
        f0=0.5,
    )
    for x in ([0.0, 0.0], [4.0, -2.0]):
        np.testing.assert_allclose(model.eval_grad_f(x), [0.3, -1.2], atol=1e-14)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    kernels = [LINEAR, RBF, KernelSpec(family="polynomial", degree=3, offset=0.5)]
    pairs = 0
    while pairs < 50:
        kernel = kernels[pairs % len(kernels)]
        model = random_model(rng, kernel)
        x = rng.uniform(-1.5, 1.5, size=2)
        grad = model.eval_grad_f(x)
        h = 1e-5
        fd = np.empty(2)
        for j in range(2):
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[j] = (model.eval_f(xp) - model.eval_f(xm)) / (2.0 * h)
        assert np.linalg.norm(grad - fd) <= 1e-5 * (1.0 + np.linalg.norm(grad))
        pairs += 1


def test_batch_forms_match_scalar_forms():
    rng = np.random.default_rng(1)
    model = random_model(rng, RBF)
    X = rng.uniform(-1.0, 1.0, size=(6, 2))
    vals = model.decision_values(X)
    grads = model.grad_values(X)
    for i in range(6):
        assert vals[i] == pytest.approx(model.eval_f(X[i]), abs=1e-13)
        np.testing.assert_allclose(grads[i], model.eval_grad_f(X[i]), atol=1e-13)


def test_hessian_linear_model_is_zero():
    rng = np.random.default_rng(2)
    model = random_model(rng, LINEAR)
    H = model.eval_hess_f(np.array([0.4, -0.9]))
    assert np.abs(H).max() <= 1e-8


def test_hessian_of_squared_norm_is_2I():
    # f(x) = ||x||^2 exactly, via degree-2 kernel with unit-axis centers
    spec = KernelSpec(family="polynomial", degree=2, offset=0.0)
    model = DiscriminantModel(
        kernel=spec,
        centers=np.array([[1.0, 0.0], [0.0, 1.0]]),
        a=np.array([1.0, 1.0]),
        b=np.zeros((2, 2)),
        f0=0.0,
    )
    for x in ([0.7, -0.2], [0.0, 0.0], [2.0, 1.0]):
        H = model.eval_hess_f(np.asarray(x))
        np.testing.assert_allclose(H, 2.0 * np.eye(2), atol=1e-5)


def test_hessian_rbf_peak():
    model = DiscriminantModel(
        kernel=RBF,
        centers=np.array([[0.5, -0.5]]),
        a=np.ones(1),
        b=np.zeros((1, 2)),
        f0=0.0,
    )
    H = model.eval_hess_f(np.array([0.5, -0.5]))
    np.testing.assert_allclose(H, -np.eye(2), atol=1e-5)


def test_hessian_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(10):
        model = random_model(rng, RBF)
        x = rng.uniform(-1.0, 1.0, size=2)
        H = model.eval_hess_f(x)
        assert np.abs(H - H.T).max() <= 1e-7 * (1.0 + np.abs(H).max())


def test_positive_scaling_covariance():
    rng = np.random.default_rng(4)
    model = random_model(rng, RBF)
    X = rng.uniform(-1.0, 1.0, size=(5, 2))
    for c in (0.1, 10.0):
        scaled = model.scaled(c)
        np.testing.assert_allclose(
            scaled.decision_values(X), c * model.decision_values(X), rtol=1e-12
        )
        np.testing.assert_allclose(
            scaled.grad_values(X), c * model.grad_values(X), rtol=1e-12
        )


def test_pruned_drops_dead_centers():
    model = DiscriminantModel(
        kernel=LINEAR,
        centers=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        a=np.array([1.0, 0.0, 0.0]),
        b=np.array([[0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]),
        f0=0.2,
        sv_index=np.array([4, 7, 9]),
    )
    slim = model.pruned()
    assert slim.n_centers == 2
    assert slim.sv_index.tolist() == [4, 9]
    x = np.array([0.3, -0.8])
    assert slim.eval_f(x) == pytest.approx(model.eval_f(x), abs=1e-14)


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    model = random_model(rng, KernelSpec(family="polynomial", degree=2, offset=1.0))
    path = tmp_path / "model.json"
    model.save(path)
    again = DiscriminantModel.load(path)
    assert again.kernel == model.kernel
    np.testing.assert_array_equal(again.centers, model.centers)
    np.testing.assert_array_equal(again.a, model.a)
    np.testing.assert_array_equal(again.b, model.b)
    assert again.f0 == model.f0
    np.testing.assert_array_equal(again.sv_index, model.sv_index)


def test_from_dict_rejects_bad_payloads():
    rng = np.random.default_rng(6)
    payload = random_model(rng, LINEAR).to_dict()
    extra = dict(payload)
    extra["junk"] = 1
    with pytest.raises(ValueError):
        DiscriminantModel.from_dict(extra)
    missing = dict(payload)
    del missing["f0"]
    with pytest.raises(ValueError):
        DiscriminantModel.from_dict(missing)


def test_shape_validation():
    with pytest.raises(ValueError):
        DiscriminantModel(
            kernel=LINEAR,
            centers=np.zeros((2, 2)),
            a=np.zeros(3),
            b=np.zeros((2, 2)),
            f0=0.0,
        )
    with pytest.raises(ValueError):
        DiscriminantModel(
            kernel=LINEAR,
            centers=np.zeros((2, 2)),
            a=np.zeros(2),
            b=np.zeros((2, 3)),
            f0=0.0,
        )
