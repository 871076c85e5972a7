"""Per-sample quadratic metrics and their validation."""

import json

import numpy as np
import pytest

from inmargin.exceptions import DataFormatError, InvalidMetricError
from inmargin.metric import MetricField, quad_norm_sq, resolve_metric
from oracles import random_spd


def test_quad_norm_examples():
    assert quad_norm_sq([3.0, 4.0], np.eye(2)) == pytest.approx(25.0, abs=1e-12)
    c = 2.7
    assert quad_norm_sq([1.0, 0.0], c * np.eye(2)) == pytest.approx(c, abs=1e-12)
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert quad_norm_sq([1.0, 1.0], M) == pytest.approx(6.0, abs=1e-12)


def test_quad_norm_scalar_metric_is_scaled_euclidean():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = int(rng.integers(1, 6))
        v = rng.standard_normal(m)
        c = float(rng.uniform(0.1, 5.0))
        assert quad_norm_sq(v, c * np.eye(m)) == pytest.approx(c * v @ v, rel=1e-12)


def test_quad_norm_rejects_indefinite():
    M = np.array([[1.0, 2.0], [2.0, 1.0]])   # eigenvalues 3 and -1
    with pytest.raises(InvalidMetricError):
        quad_norm_sq([1.0, 0.0], M)


def test_euclidean_field_is_identity():
    field = MetricField.euclidean().validated(20, 2)
    for i in range(3):
        np.testing.assert_array_equal(field.matrix(i, 2), np.eye(2))
        np.testing.assert_array_equal(field.inv_matrix(i, 2), np.eye(2))


def test_per_point_diagonal_inverse():
    field = MetricField.from_matrices([np.diag([4.0, 1.0])]).validated(1, 2)
    np.testing.assert_allclose(field.inv_matrix(0, 2), np.diag([0.25, 1.0]), atol=1e-14)


def test_validation_rejects_indefinite_per_point():
    bad = MetricField.from_matrices([np.eye(2), [[1.0, 2.0], [2.0, 1.0]]])
    with pytest.raises(InvalidMetricError):
        bad.validated(2, 2)


def test_validation_rejects_wrong_count_or_dim():
    field = MetricField.from_matrices([np.eye(2)] * 3)
    with pytest.raises(InvalidMetricError):
        field.validated(4, 2)
    with pytest.raises(InvalidMetricError):
        field.validated(3, 3)


def test_inverse_cache_multiplies_back_to_identity():
    rng = np.random.default_rng(1)
    mats = [random_spd(rng, 3, spread=float(rng.uniform(0.2, 2.0))) for _ in range(6)]
    field = MetricField.from_matrices(mats).validated(6, 3)
    for i in range(6):
        prod = field.matrix(i, 3) @ field.inv_matrix(i, 3)
        assert np.abs(prod - np.eye(3)).max() <= 1e-10


def test_rowwise_helpers_match_dense_algebra():
    rng = np.random.default_rng(2)
    mats = [random_spd(rng, 2) for _ in range(5)]
    field = MetricField.from_matrices(mats).validated(5, 2)
    V = rng.standard_normal((5, 2))
    inv_applied = field.apply_inv(V)
    for i in range(5):
        Gi = np.asarray(mats[i])
        np.testing.assert_allclose(inv_applied[i], np.linalg.solve(Gi, V[i]), atol=1e-12)
        assert field.qnorm2(V)[i] == pytest.approx(V[i] @ Gi @ V[i], rel=1e-12)
        assert field.qnorm2_inv(V)[i] == pytest.approx(
            V[i] @ np.linalg.solve(Gi, V[i]), rel=1e-10
        )


def test_json_loading(tmp_path):
    mats = [np.diag([4.0, 1.0]).tolist(), np.eye(2).tolist()]
    good = tmp_path / "metric.json"
    good.write_text(json.dumps(mats))
    field = MetricField.from_json_file(good).validated(2, 2)
    np.testing.assert_allclose(field.inv_matrix(0, 2), np.diag([0.25, 1.0]))

    bad = tmp_path / "bad.json"
    bad.write_text("not json at all {")
    with pytest.raises(DataFormatError):
        MetricField.from_json_file(bad)

    ragged = tmp_path / "ragged.json"
    ragged.write_text(json.dumps([[[1.0, 0.0], [0.0, 1.0]], [[1.0]]]))
    with pytest.raises(DataFormatError):
        MetricField.from_json_file(ragged)

    flat = tmp_path / "flat.json"
    flat.write_text(json.dumps([1.0, 2.0]))
    with pytest.raises(DataFormatError):
        MetricField.from_json_file(flat)


def test_resolve_metric_accepts_all_forms():
    e = resolve_metric(None, 3, 2)
    assert e.qnorm2(np.ones((3, 2))).tolist() == [2.0, 2.0, 2.0]
    e2 = resolve_metric("euclidean", 3, 2)
    assert e2.qnorm2_inv(np.ones((3, 2))).tolist() == [2.0, 2.0, 2.0]
    mats = np.stack([np.diag([4.0, 1.0])] * 3)
    f = resolve_metric(mats, 3, 2)
    np.testing.assert_allclose(f.qnorm2_inv(np.array([[1.0, 0.0]] * 3)), [0.25] * 3)
    same = resolve_metric(f, 3, 2)
    assert same is f or isinstance(same, MetricField)
