import math
import warnings
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from icpnn.data import (
    Dataset,
    SplitPlan,
    apply_scaling,
    fit_scaling,
    is_calibration_size,
    kfold_plan,
    load_csv,
    read_index_file,
    save_csv,
    split_icp,
    tec_features,
    write_index_file,
)
from icpnn.errors import InvalidInputError, InvalidSplitError, ParseError

from conftest import DATA_DIR


def _ds(n=20, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, d)), rng.normal(size=n))


# -- load_csv --

def test_load_csv_basic(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2,3\n4,5,6\n7,8,9\n")
    ds = load_csv(p)
    assert ds.attributes.shape == (3, 2)
    assert list(ds.labels) == [3, 6, 9]
    assert ds.attributes[1].tolist() == [4, 5]


def test_load_csv_header_and_named_label(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,target,b\n1,10,2\n3,30,4\n")
    ds = load_csv(p, label_column="target")
    assert ds.column_names == ("a", "b")
    assert list(ds.labels) == [10, 30]
    assert ds.attributes.tolist() == [[1, 2], [3, 4]]


def test_load_csv_forced_header_flag(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,4\n")
    assert len(load_csv(p, header=True)) == 1
    assert len(load_csv(p, header=False)) == 2


def test_load_csv_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ParseError, match="empty"):
        load_csv(p)


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(ParseError, match="nope.csv"):
        load_csv(tmp_path / "nope.csv")


def test_load_csv_non_numeric_cell_location(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y\n1,2\n3,abc\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p)
    assert exc.value.row == 3 and exc.value.column == 2


def test_load_csv_ragged(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p)
    assert exc.value.row == 2


def test_csv_round_trip(tmp_path):
    ds = _ds()
    save_csv(ds, tmp_path / "x.csv")
    back = load_csv(tmp_path / "x.csv")
    assert np.array_equal(back.attributes, ds.attributes)
    assert np.array_equal(back.labels, ds.labels)


@pytest.mark.skipif(not (DATA_DIR / "abalone.csv").exists(), reason="abalone.csv not prepared")
def test_load_abalone_shape():
    ds = load_csv(DATA_DIR / "abalone.csv")
    assert (len(ds), ds.n_attributes) == (4177, 8)


def test_dataset_validation():
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[np.nan]]), np.zeros(1))


# -- scaling --

def test_scaling_examples():
    train = Dataset(np.array([[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]]), np.arange(3.0))
    params = fit_scaling(train)
    scaled = apply_scaling(params, train)
    assert scaled.attributes[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert scaled.attributes[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert np.array_equal(scaled.labels, train.labels)
    test = Dataset(np.array([[12.0, 9.0]]), np.zeros(1))
    out = apply_scaling(params, test).attributes[0]
    assert out[0] == pytest.approx(1.4)
    assert out[1] == 0.0


@settings(deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 5)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_scaling_endpoints_exact(X):
    ds = Dataset(X, np.zeros(X.shape[0]))
    S = apply_scaling(fit_scaling(ds), ds).attributes
    for j in range(X.shape[1]):
        col = S[:, j]
        if X[:, j].min() == X[:, j].max():
            assert np.all(col == 0.0)
        else:
            assert col.min() == -1.0 and col.max() == 1.0
            assert np.all((col >= -1.0) & (col <= 1.0))


# -- ICP split --

def test_split_icp_sizes():
    ds = _ds(n=506)
    proper, calib = split_icp(ds, 99, seed=1)
    assert (len(proper), len(calib)) == (407, 99)


def test_split_icp_boundary_warns():
    ds = _ds(n=20)
    with pytest.warns(UserWarning):
        proper, calib = split_icp(ds, 19, seed=1)
    assert len(proper) == 1


def test_split_icp_invalid():
    ds = _ds(n=20)
    with pytest.raises(InvalidSplitError):
        split_icp(ds, 0, seed=1)
    with pytest.raises(InvalidSplitError):
        split_icp(ds, 20, seed=1)


def test_split_icp_form_warning():
    with pytest.warns(UserWarning, match="100n - 1"):
        split_icp(_ds(n=200), 100, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        split_icp(_ds(n=200), 99, seed=0)


@given(st.integers(2, 60), st.integers(0, 2**31 - 1))
def test_split_icp_partition(n, seed):
    ds = Dataset(np.arange(n, dtype=float).reshape(-1, 1), np.arange(n, dtype=float) * 2)
    q = max(1, n // 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        proper, calib = split_icp(ds, q, seed)
    rows = Counter(map(tuple, np.column_stack([ds.attributes, ds.labels])))
    got = Counter(map(tuple, np.vstack([np.column_stack([p.attributes, p.labels]) for p in (proper, calib)])))
    assert rows == got
    assert len(calib) == q


def test_is_calibration_size():
    assert all(is_calibration_size(q) for q in (99, 199, 299, 399, 999))
    assert not any(is_calibration_size(q) for q in (0, 98, 100, 300, 400))


# -- k-fold --

@pytest.mark.parametrize("n, k, sizes", [(10, 2, [5, 5]), (11, 2, [6, 5]), (506, 10, [51] * 6 + [50] * 4)])
def test_kfold_sizes(n, k, sizes):
    plan = SplitPlan(k=k, q=1, repeats=3, seed=0)
    folds = kfold_plan(n, plan)
    assert len(folds) == 3
    for repeat in folds:
        assert [len(te) for _, te in repeat] == sizes


def test_kfold_repeats_differ():
    folds = kfold_plan(100, SplitPlan(k=4, q=1, repeats=5, seed=3))
    tests = [tuple(folds[r][0][1]) for r in range(5)]
    assert len(set(tests)) == 5


def test_kfold_errors():
    with pytest.raises(InvalidInputError):
        kfold_plan(3, SplitPlan(k=4, q=1))
    with pytest.raises(InvalidSplitError):
        kfold_plan(100, SplitPlan(k=2, q=60))
    with pytest.raises(InvalidInputError):
        SplitPlan(k=1, q=1)


@given(st.integers(4, 200), st.integers(2, 4), st.integers(0, 1000))
def test_kfold_partitions(n, k, seed):
    for repeat in kfold_plan(n, SplitPlan(k=k, q=1, repeats=2, seed=seed)):
        tests = np.concatenate([te for _, te in repeat])
        assert np.array_equal(np.sort(tests), np.arange(n))
        sizes = [len(te) for _, te in repeat]
        assert max(sizes) - min(sizes) <= 1
        for tr, te in repeat:
            assert np.intersect1d(tr, te).size == 0 and tr.size + te.size == n


def test_index_file_round_trip(tmp_path):
    folds = kfold_plan(37, SplitPlan(k=3, q=1, repeats=2, seed=9))
    write_index_file(tmp_path / "s.txt", folds)
    back = read_index_file(tmp_path / "s.txt")
    for a, b in zip(folds, back):
        for (tr1, te1), (tr2, te2) in zip(a, b):
            assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)


def test_index_file_rejects_non_partition(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("# n=4 k=2 repeats=1\n0 1\n1 2\n")
    with pytest.raises(ParseError):
        read_index_file(p)


# -- quadrature features --

def test_tec_hour_examples():
    sh, ch, _, _ = tec_features(0.0, 100)
    assert (sh, ch) == (0.0, 1.0)
    sh, ch, _, _ = tec_features(6.0, 100)
    assert abs(sh - 1) < 1e-12 and abs(ch) < 1e-12


def test_tec_year_boundary_continuity():
    a = np.array(tec_features(12.0, 365.0))
    b = np.array(tec_features(12.0, 1.0))
    assert np.linalg.norm(a[2:] - b[2:]) <= 2 * math.pi / 365 + 1e-12


def test_tec_range_errors():
    for h, d in [(24.0, 10), (-0.1, 10), (1.0, 0.5), (1.0, 366)]:
        with pytest.raises(InvalidInputError):
            tec_features(h, d)


@given(st.floats(0, 24, exclude_max=True), st.floats(1, 365))
def test_tec_unit_circle(hour, day):
    sh, ch, sd, cd = tec_features(hour, day)
    assert abs(sh * sh + ch * ch - 1) < 1e-12
    assert abs(sd * sd + cd * cd - 1) < 1e-12


def test_tec_vectorised():
    out = tec_features(np.array([0.0, 6.0]), np.array([1.0, 365.0]))
    assert all(isinstance(o, np.ndarray) and o.shape == (2,) for o in out)
