import numpy as np
import pytest

from causalmix.errors import DataError
from causalmix.graphs import Dag
from causalmix.scm import (
    ConstantCategorical,
    QualityTier,
    RootCategorical,
    RootNumeric,
    categorical_pool,
    fit_scm,
    numeric_pool,
    sample_dag,
    sample_scm,
)
from causalmix.tables import ColumnKind, Schema, Table
from causalmix.zoo import ClassifierFamily, RegressorFamily

from conftest import make_numeric_table


def rng_for(seed=0):
    return np.random.default_rng(seed)


class TestSampleDag:
    def test_zero_matrix_always_empty(self):
        c = np.zeros((4, 4))
        for seed in range(50):
            assert sample_dag(c, rng_for(seed)).edges == ()

    def test_certain_edge_always_present(self):
        c = np.zeros((3, 3))
        c[1, 2] = 1.0
        for seed in range(50):
            assert sample_dag(c, rng_for(seed)).edges == ((1, 2),)

    def test_bidirectional_resolved_fairly(self):
        c = np.zeros((2, 2))
        c[0, 1] = c[1, 0] = 1.0
        forward = 0
        for seed in range(1000):
            dag = sample_dag(c, rng_for(seed))
            assert len(dag.edges) == 1
            forward += dag.edges[0] == (0, 1)
        assert abs(forward / 1000 - 0.5) <= 0.05

    def test_always_acyclic_under_fuzz(self):
        for seed in range(1000):
            rng = rng_for(seed)
            d = int(rng.integers(2, 9))
            c = rng.random((d, d))
            np.fill_diagonal(c, 0.0)
            dag = sample_dag(c, rng)  # Dag construction verifies acyclicity
            assert dag.n_nodes == d

    def test_upper_triangular_frequencies_match(self):
        rng0 = rng_for(123)
        d = 4
        c = np.triu(rng0.uniform(0.1, 0.9, (d, d)), k=1)
        counts = np.zeros((d, d))
        n = 2000
        for seed in range(n):
            dag = sample_dag(c, rng_for(seed))
            for a, b in dag.edges:
                counts[a, b] += 1
        freq = counts / n
        mask = np.triu(np.ones((d, d), dtype=bool), k=1)
        assert np.abs(freq[mask] - c[mask]).max() <= 0.05


def linear_pair_table(n=2000, slope=3.0, noise=0.1, seed=7):
    rng = rng_for(seed)
    x = rng.normal(0, 1, n)
    y = slope * x + rng.normal(0, noise, n)
    schema = Schema((("x", ColumnKind.NUMERIC), ("y", ColumnKind.NUMERIC)), 1)
    return Table(schema, np.column_stack([x, y]))


class TestFitScm:
    def test_empty_dag_uses_root_mechanisms_only(self):
        table = make_numeric_table(rng_for(1).normal(0, 1, (100, 3)))
        scm = fit_scm(Dag(3, ()), table, QualityTier.GOOD, rng_for(2))
        assert isinstance(scm.mechanisms[0], RootNumeric)
        assert isinstance(scm.mechanisms[1], RootNumeric)
        assert isinstance(scm.mechanisms[2], RootCategorical)

    def test_linear_child_recovers_slope(self):
        table = linear_pair_table()
        scm = fit_scm(
            Dag(2, ((0, 1),)),
            table,
            QualityTier.GOOD,
            rng_for(3),
            numeric_families=(RegressorFamily.LINEAR,),
        )
        assert abs(scm.mechanisms[1].model.coef[0] - 3.0) < 0.05
        assert scm.mechanisms[1].residuals.size == table.n

    def test_single_class_categorical_child_is_constant(self):
        rng = rng_for(4)
        x = rng.normal(0, 1, 50)
        y = np.full(50, 2.0)
        schema = Schema((("x", ColumnKind.NUMERIC), ("y", ColumnKind.CATEGORICAL)), 1)
        table = Table(schema, np.column_stack([x, y]))
        scm = fit_scm(Dag(2, ((0, 1),)), table, QualityTier.GOOD, rng_for(5))
        assert isinstance(scm.mechanisms[1], ConstantCategorical)
        sampled = sample_scm(scm, 20, rng_for(6))
        np.testing.assert_allclose(sampled.data[:, 1], 2.0)

    def test_missing_data_rejected(self):
        data = np.array([[np.nan, 0.0], [1.0, 1.0], [2.0, 0.0]])
        table = make_numeric_table(data)
        with pytest.raises(DataError, match="imputed"):
            fit_scm(Dag(2, ()), table, QualityTier.GOOD, rng_for(7))

    def test_force_target_sink_drops_outgoing_and_guarantees_parents(self):
        from causalmix.scm import force_target_sink

        dag = Dag(4, ((2, 0), (2, 1), (0, 1)))  # node 2 is the target with children
        sink = force_target_sink(dag, 2)
        assert all(p != 2 for p, _ in sink.edges)
        assert sorted(p for p, c in sink.edges if c == 2) == [0, 1, 3]
        # an existing parent set is kept as-is
        dag2 = Dag(3, ((0, 2), (0, 1)))
        sink2 = force_target_sink(dag2, 2)
        assert sink2.edges == ((0, 2), (0, 1))

    def test_tier_pools(self):
        assert RegressorFamily.LINEAR in numeric_pool(QualityTier.GOOD)
        assert RegressorFamily.RIDGE not in numeric_pool(QualityTier.GOOD)
        assert RegressorFamily.RIDGE in numeric_pool(QualityTier.BETTER)
        assert ClassifierFamily.KNN in categorical_pool(QualityTier.BETTER)
        assert ClassifierFamily.KNN not in categorical_pool(QualityTier.GOOD)


class TestSampleScm:
    def test_empty_dag_preserves_column_means(self):
        rng = rng_for(8)
        data = np.column_stack([rng.normal(5, 2, 400), rng.normal(-1, 1, 400), rng.integers(0, 2, 400)])
        table = make_numeric_table(data)
        scm = fit_scm(Dag(3, ()), table, QualityTier.GOOD, rng_for(9))
        n_syn = 20000
        synthetic = sample_scm(scm, n_syn, rng_for(10))
        for j in range(2):
            sigma = data[:, j].std()
            bound = 4 * sigma / np.sqrt(n_syn) + scm.mechanisms[j].bandwidth
            assert abs(synthetic.data[:, j].mean() - data[:, j].mean()) < bound + 0.05

    def test_linear_scm_preserves_correlation(self):
        table = linear_pair_table()
        scm = fit_scm(
            Dag(2, ((0, 1),)),
            table,
            QualityTier.GOOD,
            rng_for(11),
            numeric_families=(RegressorFamily.LINEAR,),
        )
        synthetic = sample_scm(scm, 20000, rng_for(12))
        real_corr = np.corrcoef(table.data[:, 0], table.data[:, 1])[0, 1]
        syn_corr = np.corrcoef(synthetic.data[:, 0], synthetic.data[:, 1])[0, 1]
        assert abs(real_corr - syn_corr) <= 0.05

    def test_single_row_sample(self):
        table = linear_pair_table(n=100)
        scm = fit_scm(Dag(2, ((0, 1),)), table, QualityTier.GOOD, rng_for(13))
        out = sample_scm(scm, 1, rng_for(14))
        assert out.n == 1
        assert np.isfinite(out.data).all()

    def test_no_missing_and_codes_within_domain(self):
        rng = rng_for(15)
        x = rng.normal(0, 1, 300)
        y = (x + rng.normal(0, 0.5, 300) > 0).astype(float) + 1.0  # codes {1, 2}
        schema = Schema((("x", ColumnKind.NUMERIC), ("y", ColumnKind.CATEGORICAL)), 1)
        table = Table(schema, np.column_stack([x, y]))
        scm = fit_scm(Dag(2, ((0, 1),)), table, QualityTier.GOOD, rng_for(16))
        synthetic = sample_scm(scm, 5000, rng_for(17))
        assert not np.isnan(synthetic.data).any()
        assert set(np.unique(synthetic.data[:, 1])) <= {1.0, 2.0}

    def test_deterministic_given_seeds(self):
        table = linear_pair_table(n=500)
        def run():
            dag = sample_dag(np.array([[0.0, 0.7], [0.0, 0.0]]), rng_for(18))
            scm = fit_scm(dag, table, QualityTier.GOOD, rng_for(19))
            return sample_scm(scm, 100, rng_for(20)).data
        np.testing.assert_array_equal(run(), run())

    def test_zero_rows_rejected(self):
        table = linear_pair_table(n=50)
        scm = fit_scm(Dag(2, ()), table, QualityTier.GOOD, rng_for(21))
        with pytest.raises(DataError):
            sample_scm(scm, 0, rng_for(22))
