import numpy as np
import pytest

from imputed_ridge import (
    CorruptedSample,
    CsvFormatError,
    Dataset,
    load_csv,
    normalize,
    split,
    stats,
)


def test_sample_rejects_nonbinary_mask():
    with pytest.raises(ValueError):
        CorruptedSample(np.zeros(3), np.array([1.0, 0.5, 0.0]), 1.0)


def test_sample_rejects_nonzero_masked_value():
    with pytest.raises(ValueError):
        CorruptedSample(np.array([1.0, 2.0]), np.array([1.0, 0.0]), 1.0)


def test_sample_dimension():
    s = CorruptedSample(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 3.0)
    assert s.d == 2
    assert s.y == 3.0


def test_dataset_shape_validation():
    X = np.zeros((4, 3))
    with pytest.raises(ValueError):
        Dataset(X, np.zeros((4, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        Dataset(X, np.zeros((4, 3)), np.zeros(5))


def test_dataset_sample_round_trip(rng):
    X = rng.random((5, 3))
    Z = np.ones((5, 3))
    Z[2, 1] = 0.0
    X = X * Z
    ds = Dataset(X, Z, rng.random(5))
    s = ds.sample(2)
    assert s.z[1] == 0.0
    np.testing.assert_array_equal(s.xt, X[2])
    assert ds.m == 5 and ds.d == 3


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_load_csv_basic(tmp_path):
    p = _write(tmp_path / "a.csv", "1,2,3\n4,?,6\n7,8,9\n")
    ds = load_csv(p)
    assert ds.m == 3 and ds.d == 2
    np.testing.assert_array_equal(ds.y, [3.0, 6.0, 9.0])
    assert ds.Z[1, 1] == 0.0 and ds.X[1, 1] == 0.0
    assert ds.Z[0, 1] == 1.0 and ds.X[0, 1] == 2.0


def test_load_csv_missing_tokens(tmp_path):
    """Empty cells and the common NA spellings all mean missing."""
    p = _write(tmp_path / "a.csv", "1,,5\n2,na,5\n3,NaN,5\n4,?,5\n")
    ds = load_csv(p)
    assert (ds.Z[:, 1] == 0.0).all()
    assert (ds.Z[:, 0] == 1.0).all()


def test_load_csv_label_by_name(tmp_path):
    p = _write(tmp_path / "a.csv", "alpha,target,beta\n1,10,2\n3,20,4\n")
    ds = load_csv(p, label_column="target", has_header=True)
    np.testing.assert_array_equal(ds.y, [10.0, 20.0])
    np.testing.assert_array_equal(ds.X[0], [1.0, 2.0])


def test_load_csv_label_by_negative_index(tmp_path):
    p = _write(tmp_path / "a.csv", "1,2,3\n4,5,6\n")
    ds = load_csv(p, label_column=-2)
    np.testing.assert_array_equal(ds.y, [2.0, 5.0])


def test_load_csv_name_without_header(tmp_path):
    p = _write(tmp_path / "a.csv", "1,2\n")
    with pytest.raises(ValueError):
        load_csv(p, label_column="y")


def test_load_csv_missing_label_is_error(tmp_path):
    p = _write(tmp_path / "a.csv", "1,2\n3,?\n")
    with pytest.raises(CsvFormatError):
        load_csv(p)


def test_load_csv_ragged_row(tmp_path):
    p = _write(tmp_path / "a.csv", "1,2,3\n4,5\n")
    with pytest.raises(CsvFormatError, match="row 1"):
        load_csv(p)


def test_load_csv_unparseable_cell(tmp_path):
    p = _write(tmp_path / "a.csv", "1,abc,3\n")
    with pytest.raises(CsvFormatError, match="abc"):
        load_csv(p)


def test_load_csv_empty_file(tmp_path):
    p = _write(tmp_path / "a.csv", "\n\n")
    with pytest.raises(CsvFormatError):
        load_csv(p)


def test_normalize_observed_entries_only():
    # feature 0 observed range [2, 6], the masked 100 must not leak in
    X = np.array([[2.0, 1.0], [6.0, 2.0], [0.0, 3.0]])
    Z = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 1.0]])
    ds = Dataset(X * Z, Z, np.array([0.0, 5.0, 10.0]))
    n = normalize(ds)
    np.testing.assert_allclose(n.X[:, 0], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(n.X[:, 1], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(n.y, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(n.feature_ranges[0], [2.0, 6.0])
    assert n.label_range == (0.0, 10.0)


def test_normalize_keeps_masked_zero(rng):
    X = rng.uniform(-5, 5, (30, 4))
    Z = (rng.random((30, 4)) > 0.3).astype(float)
    Z[0] = 1.0  # keep every feature observed at least once
    ds = Dataset(X * Z, Z, rng.random(30))
    n = normalize(ds)
    assert np.all(n.X[n.Z == 0.0] == 0.0)
    assert n.X.min() >= 0.0 and n.X.max() <= 1.0


def test_normalize_constant_feature_warns():
    X = np.array([[3.0, 1.0], [3.0, 2.0]])
    ds = Dataset(X, np.ones((2, 2)), np.array([1.0, 2.0]))
    with pytest.warns(UserWarning, match="constant"):
        n = normalize(ds)
    assert np.all(n.X[:, 0] == 0.0)


def test_normalize_constant_labels_warn():
    ds = Dataset(np.array([[0.0], [1.0]]), np.ones((2, 1)), np.array([4.0, 4.0]))
    with pytest.warns(UserWarning):
        n = normalize(ds)
    assert np.all(n.y == 0.0)


def test_normalize_unobserved_feature_rejected():
    Z = np.array([[1.0, 0.0], [1.0, 0.0]])
    ds = Dataset(np.ones((2, 2)) * Z, Z, np.array([1.0, 2.0]))
    with pytest.raises(ValueError, match="feature 1"):
        normalize(ds)


def test_split_partitions(rng):
    X = rng.random((20, 3))
    ds = Dataset(X, np.ones((20, 3)), np.arange(20.0))
    tr, te = split(ds, 12, seed=5)
    assert tr.m == 12 and te.m == 8
    together = np.sort(np.concatenate([tr.y, te.y]))
    np.testing.assert_array_equal(together, np.arange(20.0))


def test_split_deterministic(rng):
    X = rng.random((40, 2))
    ds = Dataset(X, np.ones((40, 2)), rng.random(40))
    a1, _ = split(ds, 20, seed=9)
    a2, _ = split(ds, 20, seed=9)
    np.testing.assert_array_equal(a1.X, a2.X)
    b1, _ = split(ds, 20, seed=10)
    assert not np.array_equal(a1.X, b1.X)


def test_split_size_validation():
    ds = Dataset(np.ones((3, 1)), np.ones((3, 1)), np.ones(3))
    with pytest.raises(ValueError):
        split(ds, 3, seed=0)
    with pytest.raises(ValueError):
        split(ds, 0, seed=0)


def test_stats_fraction():
    Z = np.array([[1.0, 0.0], [1.0, 1.0]])
    ds = Dataset(np.ones((2, 2)) * Z, Z, np.zeros(2))
    st = stats(ds)
    assert st.m == 2 and st.d == 2
    assert st.fraction_remaining == pytest.approx(0.75)
