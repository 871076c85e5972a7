"""Dataset container, mixture generator, CSV format, and scoring."""

import numpy as np
import pytest

from inmargin.data import (
    Dataset,
    MixtureSpec,
    evaluate,
    gen_mixture,
    read_csv,
    write_csv,
)
from inmargin.exceptions import DataFormatError
from inmargin.kernels import KernelSpec
from inmargin.model import DiscriminantModel


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(x=np.zeros((3, 2)), y=np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        Dataset(x=np.zeros((2, 2)), y=np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[np.inf, 0.0]]), y=np.array([1.0]))


def test_mixture_spec_validation():
    with pytest.raises(ValueError):
        MixtureSpec(seed=0, n_train=0)
    with pytest.raises(ValueError):
        MixtureSpec(seed=0, sigma=-0.1)
    with pytest.raises(ValueError):
        MixtureSpec(seed=0, components_per_class=0)


def test_generation_is_reproducible():
    spec = MixtureSpec(seed=42, n_train=20, n_test=50)
    t1, s1 = gen_mixture(spec)
    t2, s2 = gen_mixture(spec)
    np.testing.assert_array_equal(t1.x, t2.x)
    np.testing.assert_array_equal(t1.y, t2.y)
    np.testing.assert_array_equal(s1.x, s2.x)
    np.testing.assert_array_equal(s1.y, s2.y)


def test_different_seeds_differ():
    a, _ = gen_mixture(MixtureSpec(seed=1, n_train=20, n_test=1))
    b, _ = gen_mixture(MixtureSpec(seed=2, n_train=20, n_test=1))
    assert not np.array_equal(a.x, b.x)


def test_labels_alternate_starting_positive():
    train, test = gen_mixture(MixtureSpec(seed=3, n_train=10, n_test=9))
    np.testing.assert_array_equal(train.y, np.array([1.0, -1.0] * 5))
    np.testing.assert_array_equal(test.y[:4], np.array([1.0, -1.0, 1.0, -1.0]))


def test_samples_follow_their_component_centers():
    # tiny noise: every sample must sit near one of its class centers
    spec = MixtureSpec(seed=8, n_train=40, n_test=10, sigma=0.01)
    train, _ = gen_mixture(spec)
    for cls in (1.0, -1.0):
        pts = train.x[train.y == cls]
        # component centers live in the unit square and the noise is tiny
        assert pts.min() > -0.1 and pts.max() < 1.1


def test_csv_round_trip_is_bitwise():
    train, _ = gen_mixture(MixtureSpec(seed=5, n_train=20, n_test=1, dim=3))
    import tempfile, os

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.csv")
        write_csv(path, train)
        again = read_csv(path)
        np.testing.assert_array_equal(again.x, train.x)
        np.testing.assert_array_equal(again.y, train.y)
        # writing the re-read data reproduces the file byte for byte
        path2 = os.path.join(tmp, "data2.csv")
        write_csv(path2, again)
        with open(path, "rb") as fh:
            b1 = fh.read()
        with open(path2, "rb") as fh:
            b2 = fh.read()
        assert b1 == b2


def test_csv_header_and_labels(tmp_path):
    train, _ = gen_mixture(MixtureSpec(seed=6, n_train=4, n_test=1))
    path = tmp_path / "d.csv"
    write_csv(path, train)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,y"
    for ln in lines[1:]:
        assert ln.endswith(",1") or ln.endswith(",-1")


def test_read_csv_rejects_malformed(tmp_path):
    cases = {
        "empty.csv": "",
        "noheader.csv": "0.1,0.2,1\n0.3,0.4,-1\n",
        "badlabel.csv": "x1,x2,y\n0.1,0.2,2\n",
        "badfield.csv": "x1,x2,y\n0.1,zap,1\n",
        "shortrow.csv": "x1,x2,y\n0.1,1\n",
        "onlyheader.csv": "x1,x2,y\n",
        "nonfinite.csv": "x1,x2,y\nnan,0.2,1\n",
    }
    for name, text in cases.items():
        p = tmp_path / name
        p.write_text(text)
        with pytest.raises(DataFormatError):
            read_csv(p)


def test_evaluate_counts_boundary_as_error():
    model = DiscriminantModel(
        kernel=KernelSpec(family="linear"),
        centers=np.array([[1.0, 0.0]]),
        a=np.ones(1),
        b=np.zeros((1, 2)),
        f0=0.0,
    )  # f(x) = x_1
    data = Dataset(
        x=np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]]),
        y=np.array([1.0, -1.0, 1.0]),
    )
    # third point sits exactly on the boundary: counted against the model
    assert evaluate(model, data) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_subset_selects_rows():
    train, _ = gen_mixture(MixtureSpec(seed=7, n_train=10, n_test=1))
    sub = train.subset(np.array([0, 3, 4]))
    assert sub.n == 3
    np.testing.assert_array_equal(sub.x, train.x[[0, 3, 4]])
    np.testing.assert_array_equal(sub.y, train.y[[0, 3, 4]])
