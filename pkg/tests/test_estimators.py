"""Estimator wrappers: sklearn conventions around the functional trainers."""

import numpy as np
import pytest
from sklearn.base import clone

from inmargin.data import MixtureSpec, gen_mixture
from inmargin.estimators import InputMarginSVC, KernelSVC, SimplifiedInputMarginSVC
from inmargin.kernels import KernelSpec
from inmargin.qp import train_svm
from inmargin.trainer import train_input_margin


def small_instance(seed=0):
    train, test = gen_mixture(MixtureSpec(seed=seed, n_train=20, n_test=100))
    return train, test


def test_get_set_params_round_trip():
    est = InputMarginSVC(sigma_sq=2.0, outer_steps=3)
    params = est.get_params()
    assert params["sigma_sq"] == 2.0
    assert params["outer_steps"] == 3
    est2 = clone(est)
    assert est2.get_params() == params
    est2.set_params(outer_steps=1)
    assert est2.outer_steps == 1


def test_svc_matches_functional_api():
    train, _ = small_instance(1)
    est = KernelSVC().fit(train.x, train.y)
    model, _ = train_svm(train, KernelSpec(family="gaussian_rbf", sigma_sq=1.0))
    np.testing.assert_allclose(est.decision_function(train.x),
                               model.decision_values(train.x), atol=1e-12)
    labels = est.predict(train.x)
    assert set(np.unique(labels)) <= {-1.0, 1.0}


def test_input_margin_matches_functional_api():
    train, _ = small_instance(2)
    est = InputMarginSVC().fit(train.x, train.y)
    model, trace = train_input_margin(train, KernelSpec(family="gaussian_rbf", sigma_sq=1.0))
    np.testing.assert_allclose(est.decision_function(train.x),
                               model.decision_values(train.x), atol=1e-12)
    assert est.margin_ == trace.best_margin
    assert est.trace_.best_step == trace.best_step


def test_arbitrary_label_values():
    train, _ = small_instance(3)
    y01 = np.where(train.y > 0, 1, 0)
    est = InputMarginSVC(outer_steps=1).fit(train.x, y01)
    preds = est.predict(train.x)
    assert set(np.unique(preds)) <= {0, 1}
    # larger label plays +1: prediction order must match the signed trainer
    est_signed = InputMarginSVC(outer_steps=1).fit(train.x, train.y)
    np.testing.assert_array_equal(preds, (est_signed.predict(train.x) > 0).astype(int))


def test_simplified_estimator_runs():
    train, _ = small_instance(4)
    est = SimplifiedInputMarginSVC().fit(train.x, train.y)
    assert est.margin_ > 0.0
    assert np.all(est.model_.b == 0.0)
    assert est.score(train.x, train.y) == 1.0


def test_rejects_more_than_two_classes():
    X = np.random.default_rng(0).standard_normal((9, 2))
    y = np.array([0, 1, 2] * 3)
    with pytest.raises(ValueError):
        InputMarginSVC().fit(X, y)


def test_predict_validates_dimensions():
    train, _ = small_instance(5)
    est = KernelSVC().fit(train.x, train.y)
    with pytest.raises(ValueError):
        est.decision_function(np.zeros((3, 5)))


def test_unfitted_predict_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        KernelSVC().predict(np.zeros((2, 2)))


def test_metric_parameter_accepted():
    train, _ = small_instance(6)
    mats = np.stack([np.diag([2.0, 1.0])] * train.n)
    est = InputMarginSVC(metric=mats, outer_steps=2).fit(train.x, train.y)
    assert est.margin_ > 0.0
