import numpy as np
import pytest
from hypothesis import given, strategies as st

from causalmix.errors import DataError
from causalmix.tables import (
    ColumnKind,
    PreprocessStats,
    Schema,
    Table,
    encode_categoricals,
    encode_jointly,
    impute,
    load_csv,
    load_dataset,
    split_sizes,
    stratified_split,
    write_csv,
    zscore,
)

from conftest import make_numeric_table


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_numeric_file(self, tmp_path):
        table = load_csv(write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n"))
        assert (table.n, table.d) == (3, 3)
        assert table.schema.kinds == (ColumnKind.NUMERIC,) * 3
        assert table.schema.target_index == 2
        np.testing.assert_allclose(table.data[:, 0], [1, 3, 5])

    def test_text_column_inferred_categorical(self, tmp_path):
        table = load_csv(write(tmp_path, "a,b,y\n1,red,0\n2,blue,1\n3,red,0\n"))
        assert table.schema.kind_of(1) is ColumnKind.CATEGORICAL
        encoded, book = encode_categoricals(table)
        assert set(book.per_column) == {"b"}
        assert len(book.per_column["b"]) == 2

    def test_empty_cell_in_numeric_column_is_missing(self, tmp_path):
        table = load_csv(write(tmp_path, "a,y\n1,0\n,1\n3,0\n"))
        assert table.n == 3
        assert np.isnan(table.data[1, 0])

    def test_na_token_is_missing(self, tmp_path):
        table = load_csv(write(tmp_path, "a,y\n1,0\nNA,1\n"))
        assert np.isnan(table.data[1, 0])

    def test_ragged_row_names_the_row(self, tmp_path):
        with pytest.raises(DataError, match="row 2"):
            load_csv(write(tmp_path, "a,b\n1,2\n3\n"))

    def test_empty_file_errors(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            load_csv(write(tmp_path, ""))

    def test_duplicate_header_errors(self, tmp_path):
        with pytest.raises(DataError, match="duplicate"):
            load_csv(write(tmp_path, "a,a\n1,2\n"))

    def test_categorical_codes_kept_verbatim(self, tmp_path):
        path = write(tmp_path, "a,y\n1.5,2\n2.5,0\n3.5,1\n")
        table = load_dataset(path, target="y")
        assert table.schema.target_kind is ColumnKind.CATEGORICAL
        np.testing.assert_allclose(table.data[:, 1], [2, 0, 1])

    def test_sidecar_kinds(self, tmp_path):
        path = write(tmp_path, "a,y\n1,0\n2,1\n")
        table = load_dataset(path, target="y", column_kinds={"a": "categorical", "y": "categorical"})
        assert table.schema.kind_of(0) is ColumnKind.CATEGORICAL
        assert table.schema.target_index == 1


class TestEncode:
    def test_first_appearance_order(self, tmp_path):
        table = load_csv(write(tmp_path, "c,y\nred,0\nblue,1\nred,0\n"))
        encoded, book = encode_categoricals(table)
        np.testing.assert_allclose(encoded.data[:, 0], [0, 1, 0])
        assert book.per_column["c"] == {"red": 0, "blue": 1}

    def test_all_numeric_unchanged(self, tmp_path):
        table = load_csv(write(tmp_path, "a,y\n1,0\n2,1\n"))
        encoded, book = encode_categoricals(table)
        assert book.is_empty()
        np.testing.assert_array_equal(encoded.data, table.data)

    def test_single_value_column(self, tmp_path):
        table = load_csv(write(tmp_path, "c,y\non,0\non,1\non,0\n"))
        encoded, _ = encode_categoricals(table)
        np.testing.assert_allclose(encoded.data[:, 0], [0, 0, 0])

    def test_decode_round_trip(self, tmp_path):
        table = load_csv(write(tmp_path, "c,y\nred,0\nblue,1\ngreen,0\n"))
        encoded, book = encode_categoricals(table)
        values = [book.decode("c", code) for code in encoded.data[:, 0]]
        assert values == ["red", "blue", "green"]

    def test_missing_cells_stay_missing(self, tmp_path):
        table = load_csv(write(tmp_path, "c,y\nred,0\n,1\nblue,0\n"))
        encoded, _ = encode_categoricals(table)
        assert np.isnan(encoded.data[1, 0])

    def test_joint_encoding_shares_codes(self, tmp_path):
        t1 = load_csv(write(tmp_path, "c,y\nred,0\nblue,1\n", "a.csv"))
        t2 = load_csv(write(tmp_path, "c,y\nblue,0\nred,1\n", "b.csv"))
        (e1, e2), book = encode_jointly([t1, t2])
        assert e1.data[0, 0] == e2.data[1, 0]  # both "red"
        assert e1.data[1, 0] == e2.data[0, 0]  # both "blue"


class TestSplitSizes:
    @pytest.mark.parametrize(
        "n,expected",
        [
            (100, (60, 20, 20)),
            (500, (300, 100, 100)),
            (1000, (600, 200, 200)),
            (10000, (600, 200, 9200)),
        ],
    )
    def test_cap_formulas(self, n, expected):
        assert split_sizes(n) == expected


def class_table(counts, seed=0):
    """Table with a unique id column so split rows can be traced."""
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.full(c, k, dtype=float) for k, c in enumerate(counts)])
    rng.shuffle(labels)
    ids = np.arange(labels.size, dtype=float)
    return make_numeric_table(np.column_stack([ids, labels]))


class TestStratifiedSplit:
    def test_partition_exact(self):
        table = class_table([400, 350, 250])
        bundle = stratified_split(table, fold_seed=5)
        ids = [set(part.data[:, 0].astype(int)) for part in (bundle.train, bundle.val, bundle.test)]
        assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])
        assert ids[0] | ids[1] | ids[2] == set(range(1000))
        assert (bundle.train.n, bundle.val.n, bundle.test.n) == (600, 200, 200)

    def test_per_class_proportionality(self):
        counts = [400, 350, 250]
        table = class_table(counts)
        bundle = stratified_split(table, fold_seed=9)
        n = table.n
        for part in (bundle.train, bundle.val, bundle.test):
            y = part.data[:, 1]
            for cls, total in enumerate(counts):
                exact = part.n * total / n
                assert abs(int((y == cls).sum()) - exact) <= 1 + 1e-9

    def test_deterministic(self):
        table = class_table([50, 30, 20])
        a = stratified_split(table, fold_seed=3)
        b = stratified_split(table, fold_seed=3)
        np.testing.assert_array_equal(a.train.data, b.train.data)
        np.testing.assert_array_equal(a.test.data, b.test.data)

    def test_different_seeds_differ(self):
        table = class_table([50, 30, 20])
        a = stratified_split(table, fold_seed=3)
        b = stratified_split(table, fold_seed=4)
        assert not np.array_equal(a.train.data, b.train.data)

    def test_small_class_errors(self):
        table = class_table([10, 2])
        with pytest.raises(DataError, match="class 1"):
            stratified_split(table, fold_seed=0)

    def test_numeric_target_rejected(self):
        data = np.column_stack([np.arange(10.0), np.arange(10.0)])
        table = make_numeric_table(data)
        object.__setattr__(table.schema, "columns", table.schema.columns)  # no-op; schema frozen
        numeric_schema = Schema(
            (("x0", ColumnKind.NUMERIC), ("y", ColumnKind.NUMERIC)), 1
        )
        with pytest.raises(DataError, match="categorical target"):
            stratified_split(Table(numeric_schema, data), fold_seed=0)

    @given(
        counts=st.lists(st.integers(min_value=3, max_value=120), min_size=2, max_size=6),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_property_partition_and_proportionality(self, counts, seed):
        table = class_table(counts, seed=1)
        bundle = stratified_split(table, fold_seed=seed)
        n = table.n
        sizes = split_sizes(n)
        assert (bundle.train.n, bundle.val.n, bundle.test.n) == sizes
        ids = np.concatenate(
            [part.data[:, 0] for part in (bundle.train, bundle.val, bundle.test)]
        )
        assert sorted(ids.astype(int)) == list(range(n))
        for part in (bundle.train, bundle.val, bundle.test):
            y = part.data[:, 1]
            for cls, total in enumerate(counts):
                exact = part.n * total / n
                assert abs(int((y == cls).sum()) - exact) <= 1 + 1e-9


class TestImpute:
    def test_numeric_mean(self):
        table = make_numeric_table(np.array([[1.0, 0.0], [np.nan, 0.0], [3.0, 1.0]]))
        out, stats = impute(table)
        np.testing.assert_allclose(out.data[:, 0], [1, 2, 3])
        assert stats.means["x0"] == 2.0

    def test_categorical_mode(self):
        data = np.array([[0.0], [0.0], [1.0], [np.nan]])
        table = Table(Schema((("y", ColumnKind.CATEGORICAL),), 0), data)
        out, stats = impute(table)
        np.testing.assert_allclose(out.data[:, 0], [0, 0, 1, 0])
        assert stats.modes["y"] == 0.0

    def test_mode_tie_breaks_to_smallest_code(self):
        data = np.array([[0.0], [1.0], [np.nan]])
        table = Table(Schema((("y", ColumnKind.CATEGORICAL),), 0), data)
        out, _ = impute(table)
        assert out.data[2, 0] == 0.0

    def test_idempotent(self):
        table = make_numeric_table(np.array([[1.0, 0.0], [np.nan, 1.0], [4.0, 0.0]]))
        once, stats = impute(table)
        twice, _ = impute(once)
        np.testing.assert_array_equal(once.data, twice.data)

    def test_transform_mode_uses_supplied_stats(self):
        stats = PreprocessStats(means={"x0": 10.0}, modes={"y": 1.0})
        table = make_numeric_table(np.array([[np.nan, 0.0], [2.0, 1.0], [2.0, 0.0]]))
        out, _ = impute(table, stats)
        assert out.data[0, 0] == 10.0

    def test_all_missing_errors(self):
        table = make_numeric_table(
            np.array([[np.nan, 0.0], [np.nan, 1.0], [np.nan, 0.0]])
        )
        with pytest.raises(DataError, match="x0"):
            impute(table)


class TestZscore:
    def test_population_standardization(self):
        table = make_numeric_table(np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 0.0]]))
        out, _ = zscore(table)
        col = out.data[:, 0]
        assert abs(col.mean()) < 1e-9
        assert abs(col.std() - 1.0) < 1e-9

    def test_constant_column_maps_to_zero(self):
        table = make_numeric_table(np.array([[5.0, 0.0], [5.0, 1.0], [5.0, 0.0]]))
        out, _ = zscore(table)
        np.testing.assert_allclose(out.data[:, 0], 0.0)

    def test_transform_with_supplied_stats(self):
        stats = PreprocessStats(means={"x0": 0.0}, stds={"x0": 2.0})
        table = make_numeric_table(np.array([[2.0, 0.0], [4.0, 1.0]]))
        out, _ = zscore(table, stats)
        np.testing.assert_allclose(out.data[:, 0], [1.0, 2.0])

    def test_categorical_untouched(self):
        table = make_numeric_table(np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 1.0]]))
        out, _ = zscore(table)
        np.testing.assert_array_equal(out.data[:, 1], table.data[:, 1])

    def test_missing_cells_rejected(self):
        table = make_numeric_table(np.array([[np.nan, 0.0], [1.0, 1.0]]))
        with pytest.raises(DataError, match="imputed"):
            zscore(table)


class TestWriteCsv:
    def test_round_trip(self, tmp_path):
        table = make_numeric_table(np.array([[1.25, 0.0], [-3.5e-7, 1.0], [2.0, 0.0]]))
        path = tmp_path / "out.csv"
        write_csv(table, path)
        back = load_dataset(path, target="y")
        np.testing.assert_array_equal(back.data, table.data)
