"""Dataset container, CSV round-trip, splitting, and standardization."""

import numpy as np
import pytest

from sigtest.data import (
    DataError,
    Dataset,
    Standardizer,
    ingest_csv,
    train_val_test_split,
    write_csv,
)


def make_dataset(n=10, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(
        features=rng.normal(size=(n, d)),
        targets=rng.normal(size=n),
        column_names=tuple(f"c{j}" for j in range(d)),
    )


class TestDataset:
    def test_valid_construction(self):
        data = make_dataset()
        assert data.n_rows == 10
        assert data.n_features == 3
        assert data.column_names == ("c0", "c1", "c2")

    def test_rejects_nan_features(self):
        X = np.ones((3, 2))
        X[1, 0] = np.nan
        with pytest.raises(DataError, match="NaN or Inf"):
            Dataset(features=X, targets=np.ones(3), column_names=("a", "b"))

    def test_rejects_inf_targets(self):
        y = np.ones(3)
        y[2] = np.inf
        with pytest.raises(DataError, match="NaN or Inf"):
            Dataset(features=np.ones((3, 2)), targets=y, column_names=("a", "b"))

    def test_rejects_target_length_mismatch(self):
        with pytest.raises(DataError, match="rows"):
            Dataset(features=np.ones((3, 2)), targets=np.ones(4), column_names=("a", "b"))

    def test_rejects_duplicate_names(self):
        with pytest.raises(DataError, match="unique"):
            Dataset(features=np.ones((3, 2)), targets=np.ones(3), column_names=("a", "a"))

    def test_rejects_empty(self):
        with pytest.raises(DataError, match="at least one row"):
            Dataset(features=np.ones((0, 2)), targets=np.ones(0), column_names=("a", "b"))

    def test_drop_column(self):
        data = make_dataset()
        dropped = data.drop_column(1)
        assert dropped.column_names == ("c0", "c2")
        np.testing.assert_array_equal(dropped.features, data.features[:, [0, 2]])
        with pytest.raises(DataError):
            data.drop_column(3)

    def test_take_preserves_order(self):
        data = make_dataset()
        sub = data.take(np.array([4, 1]))
        np.testing.assert_array_equal(sub.features[0], data.features[4])
        np.testing.assert_array_equal(sub.targets, data.targets[[4, 1]])


class TestCsvRoundTrip:
    def test_bit_identical_round_trip(self, tmp_path):
        data = make_dataset(n=50, d=4, seed=3)
        path = tmp_path / "data.csv"
        write_csv(data, path, target_name="y")
        back = ingest_csv(path, "y")
        np.testing.assert_array_equal(back.features, data.features)
        np.testing.assert_array_equal(back.targets, data.targets)
        assert back.column_names == data.column_names

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            ingest_csv(tmp_path / "missing.csv", "y")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty file"):
            ingest_csv(path, "y")

    def test_header_only(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("a,b,y\n")
        with pytest.raises(DataError, match="no data rows"):
            ingest_csv(path, "y")

    def test_duplicate_header(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("a,a,y\n1,2,3\n")
        with pytest.raises(DataError, match="duplicate column names"):
            ingest_csv(path, "y")

    def test_missing_target(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b,y\n1,2,3\n")
        with pytest.raises(DataError, match="'z' not found"):
            ingest_csv(path, "z")

    def test_non_numeric_cell_names_line_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,y\n1,2,3\n4,oops,6\n")
        with pytest.raises(DataError, match=r"line 3, column 'b'.*'oops'"):
            ingest_csv(path, "y")

    def test_non_finite_cell(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("a,y\ninf,1\n")
        with pytest.raises(DataError, match="non-finite"):
            ingest_csv(path, "y")

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b,y\n1,2,3\n4,5\n")
        with pytest.raises(DataError, match="line 3 has 2 cells"):
            ingest_csv(path, "y")

    def test_target_name_collision_on_write(self, tmp_path):
        data = make_dataset()
        with pytest.raises(DataError, match="collides"):
            write_csv(data, tmp_path / "x.csv", target_name="c0")


class TestSplit:
    def test_sizes_and_partition(self):
        data = make_dataset(n=100)
        train, val, test = train_val_test_split(data, (0.7, 0.2, 0.1), seed=1)
        assert (train.n_rows, val.n_rows, test.n_rows) == (70, 20, 10)
        # every original row appears exactly once across the three parts
        stacked = np.vstack([train.features, val.features, test.features])
        assert {tuple(r) for r in stacked} == {tuple(r) for r in data.features}

    def test_deterministic(self):
        data = make_dataset(n=40)
        first = train_val_test_split(data, seed=9)
        second = train_val_test_split(data, seed=9)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.features, b.features)

    def test_bad_fractions(self):
        data = make_dataset(n=40)
        with pytest.raises(ValueError, match="summing to 1"):
            train_val_test_split(data, (0.7, 0.2, 0.2))
        with pytest.raises(ValueError, match="summing to 1"):
            train_val_test_split(data, (0.8, 0.3, -0.1))

    def test_empty_part(self):
        data = make_dataset(n=5)
        with pytest.raises(DataError, match="empty part"):
            train_val_test_split(data, (0.9, 0.05, 0.05))


class TestStandardizer:
    def test_train_moments_only(self):
        rng = np.random.default_rng(2)
        train = rng.normal(3.0, 2.0, size=(200, 2))
        val = rng.normal(-1.0, 0.5, size=(50, 2))
        scaler = Standardizer.fit(train)
        scaled_train = scaler.transform(train)
        np.testing.assert_allclose(scaled_train.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled_train.std(axis=0), 1.0, atol=1e-12)
        scaled_val = scaler.transform(val)
        # val is scaled by train moments, so it is not centered at zero
        assert np.abs(scaled_val.mean(axis=0)).min() > 0.5

    def test_pure_function(self):
        rng = np.random.default_rng(4)
        train = rng.normal(size=(30, 3))
        scaler = Standardizer.fit(train)
        once = scaler.transform(train)
        again = scaler.transform(train)
        np.testing.assert_array_equal(once, again)

    def test_constant_column(self):
        train = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        scaler = Standardizer.fit(train)
        scaled = scaler.transform(train)
        np.testing.assert_array_equal(scaled[:, 0], np.zeros(10))

    def test_apply_returns_dataset(self):
        data = make_dataset(n=20)
        scaler = Standardizer.fit(data.features)
        out = scaler.apply(data)
        assert out.column_names == data.column_names
        np.testing.assert_array_equal(out.targets, data.targets)
        np.testing.assert_allclose(out.features.mean(axis=0), 0.0, atol=1e-12)
