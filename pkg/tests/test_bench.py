import json
import math

import numpy as np
import pytest

from causalmix.bench import (
    ArmSpec,
    BenchConfig,
    DatasetSpec,
    RunRecord,
    aggregate,
    emit_reports,
    parse_records_csv,
    quantize,
    run_benchmark,
    val_test_gap,
)
from causalmix.discovery.ensemble import EnsembleConfig
from causalmix.errors import ConfigError
from causalmix.finetune import FineTuneConfig

from conftest import make_scm_dataset


def strip_time(r: RunRecord) -> RunRecord:
    """Wall-clock time is the one legitimately nondeterministic field."""
    import dataclasses

    return dataclasses.replace(r, wall_time_seconds=0.0)


def record(dataset="ds", fold=0, arm="a", seed=0, norm_test=1.0, norm_val=None, val_ll=0.5, test_ll=0.6, completed=True):
    return RunRecord(
        dataset=dataset,
        fold=fold,
        arm=arm,
        seed=seed,
        completed=completed,
        val_log_loss=quantize(val_ll),
        val_roc_auc=0.8,
        test_log_loss=quantize(test_ll),
        test_roc_auc=0.75,
        norm_val_roc_auc=quantize(norm_test if norm_val is None else norm_val),
        norm_test_roc_auc=quantize(norm_test),
        weight_distance_total=0.1,
        weight_distance_linear=0.08,
        weight_distance_output_head=0.06,
        weight_distance_layers='{"hidden_0": "0.05"}',
        wall_time_seconds=1.0,
        error="",
    )


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench-data")
    csv_path = make_scm_dataset(root / "chain.csv", seed=11, flavour="chain", n=300)
    cfg = BenchConfig(
        datasets=(DatasetSpec(name="chain", path=str(csv_path), target="y"),),
        arms=(
            ArmSpec(kind="default"),
            ArmSpec(kind="scm", n_synthetic=400),
        ),
        folds=2,
        seed=3,
        discovery=EnsembleConfig(n_runs=10),
        finetune=FineTuneConfig(finetune_steps=10, batch_size=16),
    )
    return cfg


class TestRunBenchmark:
    def test_cartesian_record_count(self, tiny_config, tmp_path):
        records = run_benchmark(tiny_config, tmp_path / "out")
        assert len(records) == 2 * 2  # folds x arms
        assert all(r.completed for r in records)

    def test_resume_skips_completed_work(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        first = run_benchmark(tiny_config, out)
        journal_before = (out / "records.jsonl").read_text()
        second = run_benchmark(tiny_config, out, resume=True)
        journal_after = (out / "records.jsonl").read_text()
        assert journal_before == journal_after  # zero new computations
        assert [r.key() for r in first] == [r.key() for r in second]
        assert first == second

    def test_records_deterministic_across_runs(self, tiny_config, tmp_path):
        a = run_benchmark(tiny_config, tmp_path / "a")
        b = run_benchmark(tiny_config, tmp_path / "b")
        assert [strip_time(r) for r in a] == [strip_time(r) for r in b]

    def test_workers_produce_identical_records(self, tiny_config, tmp_path):
        serial = run_benchmark(tiny_config, tmp_path / "serial")
        parallel_cfg = BenchConfig(**{**tiny_config.__dict__, "workers": 3})
        parallel = run_benchmark(parallel_cfg, tmp_path / "parallel")
        assert [strip_time(r) for r in serial] == [strip_time(r) for r in parallel]

    def test_schema_preserving_arms_complete(self, tmp_path):
        from causalmix.generators import TableAugmentConfig

        csv_path = make_scm_dataset(tmp_path / "mix.csv", seed=13, flavour="mixed", n=200)
        cfg = BenchConfig(
            datasets=(DatasetSpec(name="mix", path=str(csv_path), target="y"),),
            arms=(
                ArmSpec(
                    kind="table_augment",
                    table_augment=TableAugmentConfig(
                        subsample_active=False, resample_target_active=False
                    ),
                ),
                ArmSpec(kind="mixed_model", n_synthetic=150),
            ),
            folds=1,
            seed=1,
            discovery=EnsembleConfig(n_runs=4),
            finetune=FineTuneConfig(finetune_steps=4, batch_size=8),
        )
        records = run_benchmark(cfg, tmp_path / "out")
        assert len(records) == 2
        assert all(r.completed for r in records), [r.error for r in records]

    @pytest.mark.parametrize("baseline", ["knn", "untrained_reference"])
    def test_alternate_baselines(self, tmp_path, baseline):
        csv_path = make_scm_dataset(tmp_path / "b.csv", seed=14, flavour="chain", n=150)
        cfg = BenchConfig(
            datasets=(DatasetSpec(name="b", path=str(csv_path), target="y"),),
            arms=(ArmSpec(kind="default"),),
            folds=1,
            seed=2,
            baseline=baseline,
            finetune=FineTuneConfig(finetune_steps=3, batch_size=8),
        )
        records = run_benchmark(cfg, tmp_path / baseline)
        assert records[0].completed
        assert not math.isnan(records[0].norm_test_roc_auc)

    def test_failure_recorded_not_fatal(self, tmp_path):
        csv_path = make_scm_dataset(tmp_path / "tiny.csv", seed=12, flavour="chain", n=40)
        cfg = BenchConfig(
            datasets=(DatasetSpec(name="tiny", path=str(csv_path), target="y"),),
            # alpha in (0, 1) with a schema-changing synthetic source fails in-plan
            arms=(
                ArmSpec(kind="default"),
                ArmSpec(kind="causal_mix", alpha=0.5, n_synthetic=50),
            ),
            folds=1,
            seed=0,
            discovery=EnsembleConfig(n_runs=4),
            finetune=FineTuneConfig(finetune_steps=3, batch_size=8),
            time_budget_seconds=0.000001,  # force budget expiry
        )
        records = run_benchmark(cfg, tmp_path / "out")
        assert len(records) == 2
        assert not all(r.completed for r in records)
        assert any("time budget" in r.error or r.error for r in records if not r.completed)


class TestArmSpec:
    def test_unimplemented_kind_rejected(self):
        with pytest.raises(ConfigError, match="unimplemented arm"):
            ArmSpec(kind="tabebm")

    def test_causal_mix_defaults_to_scm_source(self):
        arm = ArmSpec(kind="causal_mix")
        assert arm.sources[0].kind == "scm"

    def test_causal_mix_rejects_non_synthetic_sources(self):
        with pytest.raises(ConfigError, match="synthetic"):
            ArmSpec(kind="causal_mix", sources=(ArmSpec(kind="default"),))

    def test_duplicate_arm_names_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            BenchConfig(
                datasets=(DatasetSpec(name="x", path="x.csv"),),
                arms=(ArmSpec(kind="default"), ArmSpec(kind="default")),
            )


class TestAggregate:
    def test_box_statistics_match_definitions(self):
        records = [record(fold=i, norm_test=v) for i, v in enumerate([1.0, 2.0, 3.0, 4.0, 5.0])]
        stats = aggregate(records)["arms"]["a"]
        assert stats["median"] == 3.0
        assert stats["q1"] == 2.0
        assert stats["q3"] == 4.0
        assert stats["whisker_lo"] == 1.0  # fence -1 clipped to observed min
        assert stats["whisker_hi"] == 5.0  # fence 7 clipped to observed max

    def test_median_matches_sort_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            values = rng.normal(0, 5, int(rng.integers(1, 30)))
            records = [record(fold=i, norm_test=float(v)) for i, v in enumerate(values)]
            got = aggregate(records)["arms"]["a"]["median"]
            ordered = sorted(quantize(float(v)) for v in values)
            n = len(ordered)
            expected = ordered[n // 2] if n % 2 else (ordered[n // 2 - 1] + ordered[n // 2]) / 2
            assert got == quantize(expected)  # summary floats carry 9 significant digits

    def test_strict_ordering_gives_exact_ranks(self):
        records = []
        for fold in range(4):
            records.append(record(fold=fold, arm="good", norm_test=2.0))
            records.append(record(fold=fold, arm="bad", norm_test=1.0))
        summary = aggregate(records)
        assert summary["avg_ranks"]["good"] == 1.0
        assert summary["avg_ranks"]["bad"] == 2.0

    def test_tie_shares_average_rank(self):
        records = [
            record(fold=0, arm="a", norm_test=1.0),
            record(fold=0, arm="b", norm_test=1.0),
        ]
        summary = aggregate(records)
        assert summary["avg_ranks"]["a"] == 1.5
        assert summary["avg_ranks"]["b"] == 1.5

    def test_rank_sum_invariant(self):
        rng = np.random.default_rng(1)
        arms = ["a", "b", "c", "d"]
        records = []
        for fold in range(6):
            for arm in arms:
                records.append(record(fold=fold, arm=arm, norm_test=float(rng.normal())))
        n_arms = len(arms)
        for fold in range(6):
            cell = [r for r in records if r.fold == fold]
            values = np.array([r.norm_test_roc_auc for r in cell])
            from causalmix.bench import _rank_with_ties

            assert _rank_with_ties(values).sum() == n_arms * (n_arms + 1) / 2

    def test_incomplete_records_excluded(self):
        records = [record(fold=0, norm_test=1.0), record(fold=1, norm_test=99.0, completed=False)]
        stats = aggregate(records)["arms"]["a"]
        assert stats["n"] == 1


class TestValTestGap:
    def test_identical_series_full_correlation(self):
        records = []
        for fold, ll in enumerate([0.2, 0.5, 0.8]):
            records.append(record(fold=fold, val_ll=ll, test_ll=ll))
        gap = val_test_gap(records)
        assert gap.matrix[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated_series(self):
        records = []
        for fold, ll in enumerate([0.2, 0.5, 0.8]):
            records.append(record(fold=fold, val_ll=ll, test_ll=-ll))
        gap = val_test_gap(records)
        assert gap.matrix[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_two_folds_degenerate(self):
        records = [record(fold=0, val_ll=0.3, test_ll=0.9), record(fold=1, val_ll=0.5, test_ll=0.1)]
        gap = val_test_gap(records)
        cell = gap.matrix[0, 0]
        assert math.isnan(cell) or abs(abs(cell) - 1.0) < 1e-12

    def test_score_gap_median(self):
        records = [
            record(dataset="d1", fold=0, norm_val=2.0, norm_test=1.0),
            record(dataset="d1", fold=1, norm_val=4.0, norm_test=1.0),
            record(dataset="d2", fold=0, norm_val=1.0, norm_test=1.0),
            record(dataset="d2", fold=1, norm_val=1.0, norm_test=1.0),
        ]
        gap = val_test_gap(records)
        assert gap.score_gap["a"] == pytest.approx(1.0)  # median of {2.0, 0.0}

    def test_sorted_by_average_correlation(self):
        records = []
        for fold, ll in enumerate([0.2, 0.5, 0.8]):
            records.append(record(dataset="good", arm="a", fold=fold, val_ll=ll, test_ll=ll))
            records.append(record(dataset="bad", arm="a", fold=fold, val_ll=ll, test_ll=-ll))
        gap = val_test_gap(records)
        assert gap.datasets == ["good", "bad"]


class TestReports:
    def make_records(self):
        rng = np.random.default_rng(2)
        records = []
        for ds in ("d1", "d2"):
            for fold in range(3):
                for arm in ("default", "scm"):
                    records.append(
                        record(
                            dataset=ds,
                            fold=fold,
                            arm=arm,
                            norm_test=float(rng.normal()),
                            val_ll=float(rng.uniform(0.1, 1.0)),
                            test_ll=float(rng.uniform(0.1, 1.0)),
                        )
                    )
        return records

    def test_emit_and_parse_round_trip(self, tmp_path):
        records = self.make_records()
        paths = emit_reports(records, tmp_path)
        parsed = parse_records_csv(paths["records"])
        assert parsed == sorted(records, key=lambda r: (r.dataset, r.fold, r.arm, r.seed))

    def test_reruns_byte_identical(self, tmp_path):
        records = self.make_records()
        paths = emit_reports(records, tmp_path / "a")
        again = emit_reports(records, tmp_path / "b")
        for name in paths:
            assert paths[name].read_bytes() == again[name].read_bytes()

    def test_empty_records_yield_headers_only(self, tmp_path):
        paths = emit_reports([], tmp_path)
        lines = paths["records"].read_text().splitlines()
        assert len(lines) == 1
        summary = json.loads(paths["summary"].read_text())
        assert summary["n_records"] == 0

    def test_row_count(self, tmp_path):
        records = self.make_records()[:4]
        paths = emit_reports(records, tmp_path)
        assert len(paths["records"].read_text().splitlines()) == 5

    def test_nan_metrics_survive_round_trip(self, tmp_path):
        bad = RunRecord(dataset="d", fold=0, arm="a", seed=0, completed=False, error="boom")
        paths = emit_reports([bad], tmp_path)
        parsed = parse_records_csv(paths["records"])[0]
        assert math.isnan(parsed.val_log_loss)
        assert parsed.error == "boom"
        assert parsed == bad
