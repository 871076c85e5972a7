"""Rescaling-only variant: target computation and the reduced training loop."""

import numpy as np
import pytest

from inmargin.data import Dataset, MixtureSpec, gen_mixture
from inmargin.kernels import KernelSpec, k_matrix
from inmargin.metric import MetricField
from inmargin.model import DiscriminantModel
from inmargin.qp import train_svm
from inmargin.simplified import simplified_g, train_simplified
from inmargin.temporals import compute_pqr
from inmargin.trainer import TrainConfig
from oracles import random_spd

RBF = KernelSpec(family="gaussian_rbf", sigma_sq=1.0)
LINEAR = KernelSpec(family="linear")


def test_g_matches_gradient_norm_over_weight_norm():
    # same quantity the full pipeline computes for an a-only model at xhat = x
    rng = np.random.default_rng(0)
    for trial in range(10):
        n, m, nc = 8, 2, 4
        model = DiscriminantModel(
            kernel=RBF,
            centers=rng.uniform(-1.0, 1.0, size=(nc, m)),
            a=rng.standard_normal(nc) + 0.3,
            b=np.zeros((nc, m)),
            f0=0.1,
        )
        X = rng.uniform(-1.0, 1.0, size=(n, m))
        if trial % 2:
            metric = MetricField.from_matrices(
                [random_spd(rng, m) for _ in range(n)]
            ).validated(n, m)
        else:
            metric = MetricField.euclidean()
        g = simplified_g(model, X, metric)
        p, q, r = compute_pqr(model, X)
        want = np.sqrt(metric.qnorm2_inv(q) / r)
        np.testing.assert_allclose(g, want, atol=1e-10)


def test_g_is_one_for_linear_kernel_euclidean():
    # a linear machine has constant gradient w, so g = ||w||/||w|| = 1
    rng = np.random.default_rng(1)
    model = DiscriminantModel(
        kernel=LINEAR,
        centers=rng.standard_normal((3, 2)),
        a=rng.standard_normal(3),
        b=np.zeros((3, 2)),
        f0=0.2,
    )
    X = rng.standard_normal((6, 2))
    g = simplified_g(model, X, MetricField.euclidean())
    np.testing.assert_allclose(g, np.ones(6), atol=1e-12)


def test_g_single_center_rbf_hand_formula():
    center = np.array([[0.2, -0.4]])
    model = DiscriminantModel(
        kernel=RBF, centers=center, a=np.array([1.0]), b=np.zeros((1, 2)), f0=0.0
    )
    rng = np.random.default_rng(2)
    X = rng.uniform(-1.0, 1.0, size=(5, 2))
    g = simplified_g(model, X, MetricField.euclidean())
    diff = X - center
    dist = np.linalg.norm(diff, axis=1)
    # |grad| = (dist / sigma^2) exp(-dist^2 / (2 sigma^2)); ||w|| = sqrt(k(c,c)) = 1
    want = dist * np.exp(-(dist**2) / 2.0)
    np.testing.assert_allclose(g, want, atol=1e-12)


def test_rescaled_gram_stays_positive_semidefinite():
    rng = np.random.default_rng(3)
    train, _ = gen_mixture(MixtureSpec(seed=11, n_train=20, n_test=1))
    model, _ = train_svm(train, RBF)
    g = simplified_g(model, train.x, MetricField.euclidean())
    K = k_matrix(RBF, train.x, train.x)
    K_resc = K / np.outer(g, g)
    evals = np.linalg.eigvalsh((K_resc + K_resc.T) / 2.0)
    assert evals.min() >= -1e-10 * max(np.trace(K_resc), 1.0)


def test_unit_targets_reproduce_plain_svm():
    # with g identically 1 one round is exactly the standard dual
    from inmargin.qp import DualProblem, solve_dual
    from inmargin.simplified import _rescaled_round

    train, _ = gen_mixture(MixtureSpec(seed=5, n_train=20, n_test=1))
    K = k_matrix(RBF, train.x, train.x)
    model, sol = _rescaled_round(train, RBF, K, np.ones(train.n), None, 1e-6)
    svm_model, svm_sol = train_svm(train, RBF)
    np.testing.assert_allclose(sol.alpha, svm_sol.alpha, atol=1e-10)
    np.testing.assert_allclose(model.a, svm_model.a, atol=1e-10)
    assert model.f0 == pytest.approx(svm_model.f0, abs=1e-10)


def test_rounds_satisfy_margin_targets():
    train, _ = gen_mixture(MixtureSpec(seed=7, n_train=20, n_test=1))
    model, trace = train_simplified(train, RBF)
    assert np.all(train.y * model.decision_values(train.x) > 0.0)


def test_margin_improves_often():
    improved = 0
    for seed in range(10):
        train, _ = gen_mixture(MixtureSpec(seed=seed, n_train=20, n_test=1))
        model, trace = train_simplified(train, RBF)
        if trace.best_margin > trace.steps[0].margin * 1.001:
            improved += 1
    assert improved >= 5


def test_best_margin_never_below_svm():
    for seed in (0, 3, 8):
        train, _ = gen_mixture(MixtureSpec(seed=seed, n_train=20, n_test=1))
        model, trace = train_simplified(train, RBF)
        assert trace.best_margin >= trace.steps[0].margin - 1e-12
        assert trace.steps[0].status == "svm"


def test_models_stay_position_free():
    # the variant never moves centers or grows b-terms
    train, _ = gen_mixture(MixtureSpec(seed=4, n_train=20, n_test=1))
    model, trace = train_simplified(train, RBF)
    assert np.all(model.b == 0.0)
    rows = {tuple(np.round(c, 12)) for c in model.centers}
    all_rows = {tuple(np.round(r, 12)) for r in train.x}
    assert rows <= all_rows


def test_config_shape_matches_full_trainer():
    train, _ = gen_mixture(MixtureSpec(seed=9, n_train=20, n_test=1))
    config = TrainConfig(outer_steps=2)
    model, trace = train_simplified(train, RBF, config=config)
    assert len(trace.steps) <= 3
    assert trace.config == config
