"""Benchmark orchestration: datasets x folds x arms, score normalization,
aggregation, and report emission.

Every metric stored in a RunRecord is quantized to 9 significant digits at
record time, so serialized reports round-trip exactly and reruns are
byte-identical. Arm tasks are pure functions of derived seeds and may run
concurrently; records are appended to ``records.jsonl`` through a single
lock and sorted before report emission.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Sequence

import numpy as np

from .discovery.ensemble import EnsembleConfig, run_discovery_ensemble
from .errors import ConfigError, DataError
from .finetune import (
    FineTuneConfig,
    ReferenceModel,
    evaluate_model,
    finetune,
    weight_distance,
)
from .generators import (
    DEFAULT_N_SYNTHETIC,
    MixPlan,
    TableAugmentConfig,
    generate_mixed_model,
    generate_scm,
    generate_table_augment,
)
from .metrics import normalize_score, pearson, roc_auc
from .scm import QualityTier
from .seeds import child_rng, stable_key
from .tables import (
    PreprocessStats,
    Table,
    encode_categoricals,
    impute,
    load_dataset,
    stratified_split,
    zscore,
)
from .zoo import ClassifierFamily, ClassifierSpec, fit_classifier

RECORD_COLUMNS = (
    "dataset",
    "fold",
    "arm",
    "seed",
    "completed",
    "val_log_loss",
    "val_roc_auc",
    "test_log_loss",
    "test_roc_auc",
    "norm_val_roc_auc",
    "norm_test_roc_auc",
    "weight_distance_total",
    "weight_distance_linear",
    "weight_distance_output_head",
    "weight_distance_layers",
    "wall_time_seconds",
    "error",
)

ARM_KINDS = ("default", "table_augment", "mixed_model", "scm", "causal_mix")


def quantize(value: float) -> float:
    """Round to the 9 significant digits used by every emitted file."""
    return float(format(float(value), ".9g"))


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    target: str | None = None
    column_kinds: tuple[tuple[str, str], ...] | None = None


@dataclass(frozen=True)
class ArmSpec:
    kind: str
    name: str = ""
    alpha: float = 0.5
    tier: QualityTier = QualityTier.GOOD
    n_synthetic: int = DEFAULT_N_SYNTHETIC
    target_as_child: bool = False
    table_augment: TableAugmentConfig = field(default_factory=TableAugmentConfig)
    sources: tuple["ArmSpec", ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ARM_KINDS:
            raise ConfigError(f"unimplemented arm {self.kind!r}")
        if self.kind == "causal_mix" and not self.sources:
            object.__setattr__(
                self,
                "sources",
                (
                    ArmSpec(
                        kind="scm",
                        tier=self.tier,
                        n_synthetic=self.n_synthetic,
                        target_as_child=self.target_as_child,
                    ),
                ),
            )
        for source in self.sources:
            if source.kind not in ("table_augment", "mixed_model", "scm"):
                raise ConfigError(
                    f"mix sources must be synthetic generator arms, got {source.kind!r}"
                )
        if not self.name:
            object.__setattr__(self, "name", self.kind)


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple[DatasetSpec, ...]
    arms: tuple[ArmSpec, ...]
    folds: int = 10
    seed: int = 0
    workers: int = 1
    time_budget_seconds: float = 3600.0
    apply_zscore: bool = True
    baseline: str = "logistic"  # logistic | knn | untrained_reference
    discovery: EnsembleConfig = field(default_factory=EnsembleConfig)
    finetune: FineTuneConfig = field(default_factory=FineTuneConfig)

    def __post_init__(self) -> None:
        if self.folds < 1:
            raise ConfigError("fold count must be >= 1")
        if not self.arms:
            raise ConfigError("arm list must be non-empty")
        if self.time_budget_seconds <= 0:
            raise ConfigError("time budget must be positive")
        if self.baseline not in ("logistic", "knn", "untrained_reference"):
            raise ConfigError(f"unknown baseline {self.baseline!r}")
        names = [a.name for a in self.arms]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate arm names: {names}")


@dataclass(frozen=True, eq=False)
class RunRecord:
    dataset: str
    fold: int
    arm: str
    seed: int
    completed: bool
    val_log_loss: float = float("nan")
    val_roc_auc: float = float("nan")
    test_log_loss: float = float("nan")
    test_roc_auc: float = float("nan")
    norm_val_roc_auc: float = float("nan")
    norm_test_roc_auc: float = float("nan")
    weight_distance_total: float = float("nan")
    weight_distance_linear: float = float("nan")
    weight_distance_output_head: float = float("nan")
    weight_distance_layers: str = "{}"
    wall_time_seconds: float = float("nan")
    error: str = ""

    def key(self) -> tuple[str, int, str, int]:
        return (self.dataset, self.fold, self.arm, self.seed)

    def __eq__(self, other) -> bool:
        """Field-wise equality with NaN == NaN, so parsed records compare
        equal to the records they were serialized from."""
        if not isinstance(other, RunRecord):
            return NotImplemented
        for col in RECORD_COLUMNS:
            a, b = getattr(self, col), getattr(other, col)
            if isinstance(a, float) and isinstance(b, float):
                if math.isnan(a) and math.isnan(b):
                    continue
            if a != b:
                return False
        return True


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def record_to_row(record: RunRecord) -> list[str]:
    return [_format_value(getattr(record, col)) for col in RECORD_COLUMNS]


def record_from_row(row: Sequence[str]) -> RunRecord:
    values = dict(zip(RECORD_COLUMNS, row))
    kwargs = {}
    for col in RECORD_COLUMNS:
        raw = values[col]
        if col in ("dataset", "arm", "error", "weight_distance_layers"):
            kwargs[col] = raw
        elif col in ("fold", "seed"):
            kwargs[col] = int(raw)
        elif col == "completed":
            kwargs[col] = raw == "true"
        else:
            kwargs[col] = float(raw)
    return RunRecord(**kwargs)


@dataclass(frozen=True)
class FoldContext:
    dataset: str
    fold: int
    train: Table
    val: Table
    test: Table
    generator_table: Table
    stats: PreprocessStats
    classes: tuple[float, ...]
    init_model: ReferenceModel
    baseline_val_auc: float
    baseline_test_auc: float


def _transform_like_generator(table: Table, stats: PreprocessStats, apply_z: bool) -> Table:
    out, _ = impute(table, stats)
    if apply_z:
        out, _ = zscore(out, stats)
    return out


def _baseline_scores(
    cfg: BenchConfig,
    train: Table,
    val: Table,
    test: Table,
    init_model: ReferenceModel,
    classes: tuple[float, ...],
) -> tuple[float, float]:
    if cfg.baseline == "untrained_reference":
        return evaluate_model(init_model, val)[1], evaluate_model(init_model, test)[1]
    family = ClassifierFamily.LOGISTIC if cfg.baseline == "logistic" else ClassifierFamily.KNN
    X, y = train.features_and_target()
    model = fit_classifier(ClassifierSpec(family), X, y, child_rng(cfg.seed, stable_key("baseline")))
    full = np.asarray(classes)
    scores = []
    for split in (val, test):
        Xs, ys = split.features_and_target()
        fitted_probs = model.predict_proba(Xs)
        # expand to the dataset-wide class list; classes unseen in train get 0
        probs = np.zeros((Xs.shape[0], full.size))
        cols = np.searchsorted(full, model.classes_)
        probs[:, cols] = fitted_probs
        idx = np.searchsorted(full, ys)
        scores.append(roc_auc(probs, idx))
    return scores[0], scores[1]


def prepare_fold(cfg: BenchConfig, spec: DatasetSpec, table: Table, fold: int) -> FoldContext:
    """Split, preprocess (stats fitted on the generator copy of train), build
    the shared initialization checkpoint and the per-fold baseline scores."""
    fold_seed = int(child_rng(cfg.seed, stable_key(spec.name), fold).integers(0, 2**63))
    bundle = stratified_split(table, fold_seed)
    generator_table, stats = impute(bundle.train)
    if cfg.apply_zscore:
        generator_table, stats = zscore(generator_table, stats)
    train = _transform_like_generator(bundle.train, stats, cfg.apply_zscore)
    val = _transform_like_generator(bundle.val, stats, cfg.apply_zscore)
    test = _transform_like_generator(bundle.test, stats, cfg.apply_zscore)

    classes = tuple(float(c) for c in np.unique(table.numeric_data()[:, table.schema.target_index]))
    init_rng = child_rng(cfg.seed, stable_key(spec.name), fold, stable_key("model-init"))
    init_model = ReferenceModel.initialize(len(table.schema.feature_indices()), classes, init_rng)
    base_val, base_test = _baseline_scores(cfg, train, val, test, init_model, classes)
    return FoldContext(
        dataset=spec.name,
        fold=fold,
        train=train,
        val=val,
        test=test,
        generator_table=generator_table,
        stats=stats,
        classes=classes,
        init_model=init_model,
        baseline_val_auc=base_val,
        baseline_test_auc=base_test,
    )


def _build_synthetic_pool(
    arm: ArmSpec, ctx: FoldContext, cfg: BenchConfig, rng: np.random.Generator, deadline: float | None
) -> Table | None:
    if arm.kind == "default":
        return None
    if arm.kind == "table_augment":
        return generate_table_augment(ctx.generator_table, arm.table_augment, rng)
    if arm.kind == "mixed_model":
        return generate_mixed_model(ctx.generator_table, rng, n_synthetic=arm.n_synthetic)
    if arm.kind == "scm":
        base_seed = int(rng.integers(0, 2**63))
        result = run_discovery_ensemble(
            ctx.generator_table,
            cfg.discovery.n_runs,
            base_seed=base_seed,
            config=cfg.discovery,
            deadline=deadline,
        )
        return generate_scm(
            ctx.generator_table,
            result.adjacency,
            arm.tier,
            rng,
            arm.n_synthetic,
            target_as_child=arm.target_as_child,
        )
    if arm.kind == "causal_mix":
        pools = [
            _build_synthetic_pool(source, ctx, cfg, rng, deadline)
            for source in arm.sources
        ]
        stacked = np.vstack([p.data for p in pools])
        return Table(pools[0].schema, stacked)
    raise ConfigError(f"unimplemented arm {arm.kind!r}")


def _arm_alpha(arm: ArmSpec) -> float:
    if arm.kind == "default":
        return 1.0
    if arm.kind == "causal_mix":
        return arm.alpha
    return 0.0


def run_arm(
    cfg: BenchConfig, ctx: FoldContext, arm: ArmSpec, model_sink: dict | None = None
) -> RunRecord:
    """Fine-tune one arm on one fold and score it against the fold baseline.

    `model_sink`, when given, receives the fine-tuned checkpoint under the
    record key (used by diagnostics that need full-precision parameters).
    """
    start = time.monotonic()
    deadline = start + cfg.time_budget_seconds
    rng = child_rng(cfg.seed, stable_key(ctx.dataset), ctx.fold, stable_key(arm.name))
    try:
        synthetic = _build_synthetic_pool(arm, ctx, cfg, rng, deadline)
        plan = MixPlan(
            real=ctx.train,
            synthetic=synthetic,
            alpha=_arm_alpha(arm),
            sources=(arm.name,),
        )
        model, _history = finetune(ctx.init_model, plan, ctx.val, cfg.finetune, rng)
        if model_sink is not None:
            model_sink[(ctx.dataset, ctx.fold, arm.name, cfg.seed)] = model
        val_ll, val_auc = evaluate_model(model, ctx.val)
        test_ll, test_auc = evaluate_model(model, ctx.test)
        report = weight_distance(model)
        elapsed = time.monotonic() - start
        # completed implies finite raw metrics; normalized scores may carry
        # the NaN undefined marker (zero baseline) without failing the run
        metrics_ok = all(math.isfinite(v) for v in (val_ll, val_auc, test_ll, test_auc))
        completed = elapsed <= cfg.time_budget_seconds and metrics_ok
        error = ""
        if not metrics_ok:
            error = "undefined evaluation metric"
        elif elapsed > cfg.time_budget_seconds:
            error = "time budget exceeded"
        return RunRecord(
            dataset=ctx.dataset,
            fold=ctx.fold,
            arm=arm.name,
            seed=cfg.seed,
            completed=completed,
            val_log_loss=quantize(val_ll),
            val_roc_auc=quantize(val_auc),
            test_log_loss=quantize(test_ll),
            test_roc_auc=quantize(test_auc),
            norm_val_roc_auc=quantize(normalize_score(val_auc, ctx.baseline_val_auc, +1)),
            norm_test_roc_auc=quantize(normalize_score(test_auc, ctx.baseline_test_auc, +1)),
            weight_distance_total=quantize(report.total),
            weight_distance_linear=quantize(report.per_component["linear"]),
            weight_distance_output_head=quantize(report.per_component["output_head"]),
            weight_distance_layers=json.dumps(
                {name: format(dist, ".9g") for name, dist in report.per_layer},
                sort_keys=True,
            ),
            wall_time_seconds=quantize(elapsed),
            error=error,
        )
    except Exception as exc:  # dataset-level failures are recorded, not fatal
        elapsed = time.monotonic() - start
        return RunRecord(
            dataset=ctx.dataset,
            fold=ctx.fold,
            arm=arm.name,
            seed=cfg.seed,
            completed=False,
            wall_time_seconds=quantize(elapsed),
            error=f"{type(exc).__name__}: {exc}".splitlines()[0],
        )


def _load_existing(out_dir: Path) -> list[RunRecord]:
    path = out_dir / "records.jsonl"
    records: list[RunRecord] = []
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                records.append(RunRecord(**json.loads(line)))
    return records


def run_benchmark(
    cfg: BenchConfig,
    out_dir: str | Path,
    resume: bool = False,
    model_sink: dict | None = None,
) -> list[RunRecord]:
    """Execute the sweep; returns all records (existing plus new), sorted.

    With resume on, records already present in ``records.jsonl`` are kept and
    their (dataset, fold, arm, seed) tasks are skipped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    journal = out_dir / "records.jsonl"
    existing = _load_existing(out_dir) if resume else []
    if not resume and journal.exists():
        journal.unlink()
    done = {r.key() for r in existing}

    tables: dict[str, Table] = {}
    for spec in cfg.datasets:
        kinds = dict(spec.column_kinds) if spec.column_kinds is not None else None
        table = load_dataset(spec.path, target=spec.target, column_kinds=kinds)
        table, _ = encode_categoricals(table)
        tables[spec.name] = table

    tasks: list[tuple[DatasetSpec, int, ArmSpec]] = []
    contexts: dict[tuple[str, int], FoldContext] = {}
    for spec in cfg.datasets:
        for fold in range(cfg.folds):
            wanted = [arm for arm in cfg.arms if (spec.name, fold, arm.name, cfg.seed) not in done]
            if not wanted:
                continue
            contexts[(spec.name, fold)] = prepare_fold(cfg, spec, tables[spec.name], fold)
            tasks.extend((spec, fold, arm) for arm in wanted)

    new_records: list[RunRecord] = []
    lock = Lock()

    def execute(task: tuple[DatasetSpec, int, ArmSpec]) -> RunRecord:
        spec, fold, arm = task
        record = run_arm(cfg, contexts[(spec.name, fold)], arm, model_sink=model_sink)
        with lock:
            with journal.open("a") as fh:
                fh.write(json.dumps(record.__dict__, sort_keys=True) + "\n")
            new_records.append(record)
        return record

    if cfg.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(execute, tasks))
    else:
        for task in tasks:
            execute(task)

    records = existing + new_records
    records.sort(key=lambda r: (r.dataset, r.fold, r.arm, r.seed))
    return records


@dataclass
class ArmSummary:
    n: int
    median: float
    std: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float


def _box_stats(values: np.ndarray) -> ArmSummary:
    median = float(np.median(values))
    std = float(values.std(ddof=0))
    q1 = float(np.percentile(values, 25))
    q3 = float(np.percentile(values, 75))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    whisker_lo = float(inside.min()) if inside.size else float("nan")
    whisker_hi = float(inside.max()) if inside.size else float("nan")
    return ArmSummary(int(values.size), median, std, q1, q3, whisker_lo, whisker_hi)


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    """Rank descending (1 = best) with tied values sharing the average rank."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def aggregate(records: Sequence[RunRecord]) -> dict:
    """Per-arm box statistics of the normalized test score, per dataset x arm
    mean +- std, and average ranks across (dataset, fold) groups."""
    completed = [r for r in records if r.completed and not math.isnan(r.norm_test_roc_auc)]
    arms = sorted({r.arm for r in records})
    summary: dict = {
        "schema_version": 1,
        "n_records": len(records),
        "n_completed": sum(1 for r in records if r.completed),
        "arms": {},
        "per_dataset_arm": {},
        "avg_ranks": {},
        "rank_groups": 0,
    }
    for arm in arms:
        values = np.array([r.norm_test_roc_auc for r in completed if r.arm == arm])
        if values.size:
            stats = _box_stats(values)
            summary["arms"][arm] = {
                "n": stats.n,
                "median": quantize(stats.median),
                "std": quantize(stats.std),
                "q1": quantize(stats.q1),
                "q3": quantize(stats.q3),
                "whisker_lo": quantize(stats.whisker_lo),
                "whisker_hi": quantize(stats.whisker_hi),
            }

    datasets = sorted({r.dataset for r in records})
    for ds in datasets:
        cell: dict = {}
        for arm in arms:
            values = np.array(
                [r.norm_test_roc_auc for r in completed if r.dataset == ds and r.arm == arm]
            )
            if values.size:
                cell[arm] = {
                    "mean": quantize(float(values.mean())),
                    "std": quantize(float(values.std(ddof=0))),
                    "n": int(values.size),
                }
        summary["per_dataset_arm"][ds] = cell

    rank_totals = {arm: 0.0 for arm in arms}
    rank_counts = {arm: 0 for arm in arms}
    groups = 0
    for ds in datasets:
        folds = sorted({r.fold for r in completed if r.dataset == ds})
        for fold in folds:
            cell = [r for r in completed if r.dataset == ds and r.fold == fold]
            if len(cell) < 2:
                continue
            groups += 1
            values = np.array([r.norm_test_roc_auc for r in cell])
            ranks = _rank_with_ties(values)
            for r, rank in zip(cell, ranks):
                rank_totals[r.arm] += float(rank)
                rank_counts[r.arm] += 1
    summary["rank_groups"] = groups
    for arm in arms:
        if rank_counts[arm]:
            summary["avg_ranks"][arm] = quantize(rank_totals[arm] / rank_counts[arm])
    return summary


@dataclass
class ValTestGap:
    datasets: list[str]
    arms: list[str]
    matrix: np.ndarray  # pearson(val ll, test ll) per dataset x arm
    corr_gap: dict[str, float]
    score_gap: dict[str, float]


def val_test_gap(records: Sequence[RunRecord]) -> ValTestGap:
    """Validation-test diagnostics.

    Matrix cells: Pearson correlation of validation vs test log-loss across a
    dataset's completed folds for one arm; rows and columns are sorted by
    average correlation, descending. Per arm, ``corr_gap`` is the median cell
    and ``score_gap`` the median over datasets of the mean normalized
    val-minus-test difference.
    """
    completed = [r for r in records if r.completed]
    datasets = sorted({r.dataset for r in completed})
    arms = sorted({r.arm for r in completed})
    matrix = np.full((len(datasets), len(arms)), np.nan)
    diff_cells = np.full((len(datasets), len(arms)), np.nan)
    for i, ds in enumerate(datasets):
        for j, arm in enumerate(arms):
            cell = [r for r in completed if r.dataset == ds and r.arm == arm]
            if len(cell) >= 2:
                vals = np.array([r.val_log_loss for r in cell])
                tests = np.array([r.test_log_loss for r in cell])
                matrix[i, j] = pearson(vals, tests)
            if cell:
                diffs = [
                    r.norm_val_roc_auc - r.norm_test_roc_auc
                    for r in cell
                    if not math.isnan(r.norm_val_roc_auc) and not math.isnan(r.norm_test_roc_auc)
                ]
                if diffs:
                    diff_cells[i, j] = float(np.mean(diffs))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN rows/columns
        row_avg = np.nanmean(matrix, axis=1) if matrix.size else np.array([])
        col_avg = np.nanmean(matrix, axis=0) if matrix.size else np.array([])
    row_avg = np.nan_to_num(row_avg, nan=-np.inf)
    col_avg = np.nan_to_num(col_avg, nan=-np.inf)
    row_order = np.argsort(-row_avg, kind="stable")
    col_order = np.argsort(-col_avg, kind="stable")

    sorted_datasets = [datasets[i] for i in row_order]
    sorted_arms = [arms[j] for j in col_order]
    sorted_matrix = matrix[np.ix_(row_order, col_order)]

    corr_gap: dict[str, float] = {}
    score_gap: dict[str, float] = {}
    for j, arm in enumerate(arms):
        cells = matrix[:, j]
        cells = cells[~np.isnan(cells)]
        if cells.size:
            corr_gap[arm] = quantize(float(np.median(cells)))
        diffs = diff_cells[:, j]
        diffs = diffs[~np.isnan(diffs)]
        if diffs.size:
            score_gap[arm] = quantize(float(np.median(diffs)))
    return ValTestGap(sorted_datasets, sorted_arms, sorted_matrix, corr_gap, score_gap)


def emit_reports(records: Sequence[RunRecord], out_dir: str | Path) -> dict[str, Path]:
    """Write records.csv, summary.json, corr_matrix.csv, ranks.csv, and
    boxplot_data.csv; byte-identical across reruns on identical records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=lambda r: (r.dataset, r.fold, r.arm, r.seed))
    paths: dict[str, Path] = {}

    records_path = out_dir / "records.csv"
    with records_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))
    paths["records"] = records_path

    summary = aggregate(records)
    gap = val_test_gap(records)
    summary["corr_gap"] = gap.corr_gap
    summary["score_gap"] = gap.score_gap
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    paths["summary"] = summary_path

    corr_path = out_dir / "corr_matrix.csv"
    with corr_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", *gap.arms])
        for i, ds in enumerate(gap.datasets):
            writer.writerow([ds, *(format(v, ".9g") for v in gap.matrix[i])])
    paths["corr_matrix"] = corr_path

    ranks_path = out_dir / "ranks.csv"
    with ranks_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arm", "avg_rank", "rank_groups"])
        for arm in sorted(summary["avg_ranks"]):
            writer.writerow([arm, format(summary["avg_ranks"][arm], ".9g"), summary["rank_groups"]])
    paths["ranks"] = ranks_path

    box_path = out_dir / "boxplot_data.csv"
    with box_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arm", "n", "median", "std", "q1", "q3", "whisker_lo", "whisker_hi"])
        for arm in sorted(summary["arms"]):
            stats = summary["arms"][arm]
            writer.writerow(
                [
                    arm,
                    stats["n"],
                    *(format(stats[k], ".9g") for k in ("median", "std", "q1", "q3", "whisker_lo", "whisker_hi")),
                ]
            )
    paths["boxplot"] = box_path
    return paths


def parse_records_csv(path: str | Path) -> list[RunRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_COLUMNS:
            raise DataError(f"{path}: unexpected records.csv header")
        return [record_from_row(row) for row in reader]
