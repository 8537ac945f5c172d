import numpy as np
import pytest

from genensemble.data import (CATEGORICAL, FEATURE, NUMERIC, TARGET, Column, Dataset,
                              ParseError, Schema, SchemaError, encode, load_csv,
                              save_csv, train_test_split)

NUM_SCHEMA = Schema((Column("x", NUMERIC, FEATURE), Column("y", NUMERIC, TARGET)))


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestSchema:
    def test_requires_exactly_one_target(self):
        with pytest.raises(SchemaError):
            Schema((Column("x", NUMERIC, FEATURE),))
        with pytest.raises(SchemaError):
            Schema((Column("a", NUMERIC, TARGET), Column("b", NUMERIC, TARGET)))

    def test_categorical_levels_distinct_nonempty(self):
        with pytest.raises(SchemaError):
            Column("c", CATEGORICAL, FEATURE, levels=("a", "a"))
        with pytest.raises(SchemaError):
            Column("c", CATEGORICAL, FEATURE, levels=("a", ""))
        with pytest.raises(SchemaError):
            Column("c", CATEGORICAL, FEATURE, levels=())

    def test_dataset_rejects_bad_level_index(self):
        schema = Schema((Column("c", CATEGORICAL, FEATURE, levels=("a", "b")),
                         Column("y", NUMERIC, TARGET)))
        with pytest.raises(SchemaError):
            Dataset(schema, np.array([[2.0, 1.0]]))


class TestLoadCsv:
    def test_two_row_read_back(self, tmp_path):
        ds = load_csv(write(tmp_path, "x,y\n1,2\n3,4\n"), NUM_SCHEMA)
        assert ds.n == 2
        assert ds.provenance.source == "real"
        np.testing.assert_array_equal(ds.rows, [[1.0, 2.0], [3.0, 4.0]])

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        with pytest.raises(ParseError, match=r"row 1.*'x'"):
            load_csv(write(tmp_path, "x,y\nabc,2\n"), NUM_SCHEMA)

    def test_unknown_level_is_parse_error(self, tmp_path):
        schema = Schema((Column("c", CATEGORICAL, FEATURE, levels=("red", "green")),
                         Column("y", NUMERIC, TARGET)))
        with pytest.raises(ParseError, match="blue"):
            load_csv(write(tmp_path, "c,y\nblue,1\n"), schema)

    def test_empty_file_is_error(self, tmp_path):
        with pytest.raises(ParseError, match="empty"):
            load_csv(write(tmp_path, ""), NUM_SCHEMA)

    def test_header_mismatch(self, tmp_path):
        with pytest.raises(ParseError, match="header"):
            load_csv(write(tmp_path, "y,x\n1,2\n"), NUM_SCHEMA)

    def test_round_trip_is_value_exact(self, tmp_path):
        schema = Schema((Column("x", NUMERIC, FEATURE),
                         Column("c", CATEGORICAL, FEATURE, levels=("a", "b")),
                         Column("y", NUMERIC, TARGET)))
        rng = np.random.default_rng(3)
        rows = np.column_stack([
            rng.normal(scale=1e-7, size=50) * 10.0 ** rng.integers(-12, 12, size=50),
            rng.integers(0, 2, size=50).astype(float),
            rng.normal(size=50),
        ])
        original = Dataset(schema, rows)
        path = tmp_path / "rt.csv"
        save_csv(original, path)
        loaded = load_csv(path, schema)
        assert np.array_equal(loaded.rows, original.rows)


class TestSplit:
    def test_sizes(self):
        data = Dataset(NUM_SCHEMA, np.arange(200.0).reshape(100, 2))
        train, test = train_test_split(data, 0.25, seed=7)
        assert (train.n, test.n) == (75, 25)

    def test_deterministic(self):
        data = Dataset(NUM_SCHEMA, np.arange(200.0).reshape(100, 2))
        a = train_test_split(data, 0.25, seed=7)
        b = train_test_split(data, 0.25, seed=7)
        assert np.array_equal(a[0].rows, b[0].rows)
        assert np.array_equal(a[1].rows, b[1].rows)

    def test_small_partition(self):
        data = Dataset(NUM_SCHEMA, np.arange(8.0).reshape(4, 2))
        train, test = train_test_split(data, 0.25, seed=0)
        assert (train.n, test.n) == (3, 1)
        combined = np.vstack([train.rows, test.rows])
        assert sorted(map(tuple, combined)) == sorted(map(tuple, data.rows))

    def test_fraction_bounds(self):
        data = Dataset(NUM_SCHEMA, np.arange(8.0).reshape(4, 2))
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                train_test_split(data, bad, seed=0)

    def test_partition_property_random(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            n = int(rng.integers(2, 60))
            data = Dataset(NUM_SCHEMA, rng.normal(size=(n, 2)))
            frac = float(rng.uniform(0.05, 0.95))
            train, test = train_test_split(data, frac, seed=trial)
            assert test.n == int(np.floor(frac * n + 0.5))
            combined = sorted(map(tuple, np.vstack([train.rows, test.rows])))
            assert combined == sorted(map(tuple, data.rows))


class TestEncode:
    def test_population_zscore(self):
        data = Dataset(NUM_SCHEMA, np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))
        fm = encode(data, data, standardize=True)
        # hand computation: mean 2, population stddev sqrt(2/3)
        expected = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0 / 3.0)
        np.testing.assert_allclose(fm.x[:, 0], expected, atol=1e-12)
        np.testing.assert_allclose(expected[2], 1.2247448, atol=1e-6)
        assert abs(fm.x[:, 0].mean()) < 1e-9
        assert abs(fm.x[:, 0].std() - 1.0) < 1e-9

    def test_one_hot_rows_sum_to_one(self):
        schema = Schema((Column("c", CATEGORICAL, FEATURE, levels=("a", "b", "c")),
                         Column("y", NUMERIC, TARGET)))
        data = Dataset(schema, np.array([[0.0, 1.0], [2.0, 1.0], [1.0, 1.0]]))
        fm = encode(data, data, standardize=False)
        assert fm.d == 3
        np.testing.assert_array_equal(fm.x.sum(axis=1), np.ones(3))

    def test_no_standardize_is_identity(self):
        data = Dataset(NUM_SCHEMA, np.array([[1.5, 0.0], [-2.0, 1.0]]))
        fm = encode(data, data, standardize=False)
        np.testing.assert_array_equal(fm.x[:, 0], [1.5, -2.0])
        assert fm.scaler is None

    def test_constant_column_maps_to_zero(self):
        data = Dataset(NUM_SCHEMA, np.array([[5.0, 0.0], [5.0, 1.0]]))
        fm = encode(data, data, standardize=True)
        np.testing.assert_array_equal(fm.x[:, 0], [0.0, 0.0])

    def test_scaler_depends_only_on_train(self):
        train = Dataset(NUM_SCHEMA, np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))
        test_a = Dataset(NUM_SCHEMA, np.array([[10.0, 0.0]]))
        test_b = Dataset(NUM_SCHEMA, np.array([[-999.0, 5.0]]))
        fa = encode(train, test_a, standardize=True)
        fb = encode(train, test_b, standardize=True)
        np.testing.assert_array_equal(fa.scaler[0], fb.scaler[0])
        np.testing.assert_array_equal(fa.scaler[1], fb.scaler[1])

    def test_target_never_scaled(self):
        data = Dataset(NUM_SCHEMA, np.array([[1.0, 100.0], [2.0, 200.0], [3.0, 300.0]]))
        fm = encode(data, data, standardize=True)
        np.testing.assert_array_equal(fm.y, [100.0, 200.0, 300.0])

    def test_classification_target_becomes_class_indices(self):
        schema = Schema((Column("x", NUMERIC, FEATURE),
                         Column("y", CATEGORICAL, TARGET, levels=("no", "yes"))))
        data = Dataset(schema, np.array([[0.5, 1.0], [1.5, 0.0]]))
        fm = encode(data, data, standardize=False)
        assert fm.task == "classification"
        assert fm.n_classes == 2
        assert fm.y.dtype.kind == "i"

    def test_schema_mismatch_rejected(self):
        other = Schema((Column("z", NUMERIC, FEATURE), Column("y", NUMERIC, TARGET)))
        a = Dataset(NUM_SCHEMA, np.array([[1.0, 2.0]]))
        b = Dataset(other, np.array([[1.0, 2.0]]))
        with pytest.raises(SchemaError):
            encode(a, b, standardize=False)
