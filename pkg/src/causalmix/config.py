"""Configuration models shared by the CLI and the HTTP service.

Config files are YAML (JSON is a YAML subset) with sections mirroring the
module configuration types. Arm names are normalized case-insensitively;
the named-but-unimplemented arms are rejected at load with a clear error.
"""

from __future__ import annotations

import warnings
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .bench import ArmSpec, BenchConfig, DatasetSpec
from .discovery.ensemble import EnsembleConfig
from .errors import ConfigError
from .finetune import FineTuneConfig
from .generators import DEFAULT_N_SYNTHETIC, UNIMPLEMENTED_ARMS, TableAugmentConfig
from .scm import QualityTier
from .tables import ColumnKind, Schema
from .zoo import ClassifierFamily, RegressorFamily

_ARM_ALIASES = {
    "default": "default",
    "tableaugment": "table_augment",
    "mixedmodel": "mixed_model",
    "mm": "mixed_model",
    "scm": "scm",
    "causalmix": "causal_mix",
    "causalmixft": "causal_mix",
}

#: unsupported learner names remapped to the nearest in-scope family
_REGRESSOR_REMAP = {
    "svr": RegressorFamily.KNN,
    "extra_trees": RegressorFamily.RANDOM_FOREST,
    "adaboost": RegressorFamily.GRAD_BOOST_TREES,
    "hist_gradient_boosting": RegressorFamily.GRAD_BOOST_TREES,
}
_CLASSIFIER_REMAP = {
    "svc": ClassifierFamily.LOGISTIC,
    "extra_trees": ClassifierFamily.RANDOM_FOREST,
    "adaboost": ClassifierFamily.GRAD_BOOST_TREES,
    "gaussian_nb": ClassifierFamily.LOGISTIC,
    "hist_gradient_boosting": ClassifierFamily.GRAD_BOOST_TREES,
}


def _canon(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


def normalize_arm_kind(kind: str) -> str:
    canon = _canon(kind)
    if canon in (_canon(u) for u in UNIMPLEMENTED_ARMS):
        raise ConfigError(f"unimplemented arm {kind!r}")
    if canon not in _ARM_ALIASES:
        raise ConfigError(f"unknown arm {kind!r}")
    return _ARM_ALIASES[canon]


def normalize_regressor_family(name: str) -> RegressorFamily:
    canon = name.lower()
    if canon in _REGRESSOR_REMAP:
        mapped = _REGRESSOR_REMAP[canon]
        warnings.warn(f"regressor family {name!r} unsupported; using {mapped.value}", stacklevel=2)
        return mapped
    try:
        return RegressorFamily(canon)
    except ValueError:
        raise ConfigError(f"unknown regressor family {name!r}") from None


def normalize_classifier_family(name: str) -> ClassifierFamily:
    canon = name.lower()
    if canon == "tabpfn" or canon == "tabpfnclassifier":
        raise ConfigError("classifier family 'TabPFNClassifier' is unsupported (no external model)")
    if canon in _CLASSIFIER_REMAP:
        mapped = _CLASSIFIER_REMAP[canon]
        warnings.warn(f"classifier family {name!r} unsupported; using {mapped.value}", stacklevel=2)
        return mapped
    try:
        return ClassifierFamily(canon)
    except ValueError:
        raise ConfigError(f"unknown classifier family {name!r}") from None


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class SchemaSection(StrictModel):
    """Column name -> kind map plus the target column name."""

    target: str
    columns: Optional[dict[str, str]] = None

    def to_schema(self, header: list[str]) -> Schema:
        if self.columns is None:
            raise ConfigError("schema section needs a columns map to build a full schema")
        missing = [h for h in header if h not in self.columns]
        if missing:
            raise ConfigError(f"schema section missing columns: {missing}")
        kinds = []
        for name in header:
            raw = self.columns[name].lower()
            try:
                kinds.append(ColumnKind(raw))
            except ValueError:
                raise ConfigError(f"unknown column kind {raw!r} for {name!r}") from None
        if self.target not in header:
            raise ConfigError(f"target column {self.target!r} not in header")
        return Schema(tuple(zip(header, kinds)), header.index(self.target))


class SubSampleFeaturesSection(StrictModel):
    active: bool = True
    min_ratio: float = 0.5
    max_ratio: float = 1.0
    include_target: str = "always"


class RandomSampleTargetSection(StrictModel):
    active: bool = True
    include_target: str = "random"
    allow_target_as_target: bool = True
    use_dataset_num_classes: bool = True
    min_discrete_values: int = 2
    max_discrete_values: int = 10


class TableAugmentSection(StrictModel):
    name: str = "TableAugmentGenerator"
    normalize: bool = False
    sub_sample_features: SubSampleFeaturesSection = Field(default_factory=SubSampleFeaturesSection)
    random_sample_target: RandomSampleTargetSection = Field(default_factory=RandomSampleTargetSection)

    def to_config(self) -> TableAugmentConfig:
        if self.normalize:
            warnings.warn("table_augment.normalize is ignored; use the pipeline z-score flag", stacklevel=2)
        candidates = self.random_sample_target.include_target
        if not self.random_sample_target.allow_target_as_target:
            candidates = "never"
        return TableAugmentConfig(
            subsample_active=self.sub_sample_features.active,
            min_ratio=self.sub_sample_features.min_ratio,
            max_ratio=self.sub_sample_features.max_ratio,
            include_old_target_features=self.sub_sample_features.include_target,
            resample_target_active=self.random_sample_target.active,
            include_old_target_candidates=candidates,
            use_dataset_num_classes=self.random_sample_target.use_dataset_num_classes,
            min_discrete_values=self.random_sample_target.min_discrete_values,
            max_discrete_values=self.random_sample_target.max_discrete_values,
        )


class ArmSection(StrictModel):
    kind: str
    name: Optional[str] = None
    alpha: float = 0.5
    tier: str = "good"
    n_synthetic: int = DEFAULT_N_SYNTHETIC
    target_as_child: bool = False
    table_augment: Optional[TableAugmentSection] = None
    scm_numeric_families: Optional[list[str]] = None
    scm_categorical_families: Optional[list[str]] = None
    sources: Optional[list["ArmSection"]] = None

    def to_spec(self) -> ArmSpec:
        kind = normalize_arm_kind(self.kind)
        try:
            tier = QualityTier(self.tier.lower())
        except ValueError:
            raise ConfigError(f"unknown quality tier {self.tier!r}") from None
        sources = tuple(s.to_spec() for s in self.sources) if self.sources else ()
        ta = (self.table_augment or TableAugmentSection()).to_config()
        # family pins are validated (and possibly remapped) eagerly
        if self.scm_numeric_families:
            [normalize_regressor_family(f) for f in self.scm_numeric_families]
        if self.scm_categorical_families:
            [normalize_classifier_family(f) for f in self.scm_categorical_families]
        return ArmSpec(
            kind=kind,
            name=self.name or kind,
            alpha=self.alpha,
            tier=tier,
            n_synthetic=self.n_synthetic,
            target_as_child=self.target_as_child,
            table_augment=ta,
            sources=sources,
        )


class DatasetSection(StrictModel):
    path: str
    name: Optional[str] = None
    table_schema: Optional[SchemaSection] = Field(default=None, alias="schema")

    def to_spec(self) -> DatasetSpec:
        name = self.name or Path(self.path).stem
        target = None
        kinds = None
        if self.table_schema is not None:
            target = self.table_schema.target
            if self.table_schema.columns is not None:
                kinds = tuple(sorted(self.table_schema.columns.items()))
        return DatasetSpec(name=name, path=self.path, target=target, column_kinds=kinds)


class DiscoverySection(StrictModel):
    n_runs: int = 100
    alpha_min: float = 0.005
    alpha_max: float = 0.1
    max_rows: int = 1000
    max_cols: int = 50
    time_cap_seconds: float = 1200.0
    max_cond_size: int = 3
    endpoint_present_denominator: bool = False

    def to_config(self) -> EnsembleConfig:
        return EnsembleConfig(**self.model_dump())


class FineTuneSection(StrictModel):
    initial_learning_rate: float = 1e-4
    finetune_steps: int = 50
    patience: int = 40
    batch_size: int = 32
    eval_every: int = 1

    def to_config(self) -> FineTuneConfig:
        return FineTuneConfig(**self.model_dump())


class BenchSection(StrictModel):
    folds: int = 10
    workers: int = 1
    time_budget_seconds: float = 3600.0
    zscore: bool = True
    baseline: str = "logistic"


class RootConfig(StrictModel):
    """Top-level config file: datasets, arms, and per-module sections."""

    seed: int = 0
    datasets: list[DatasetSection] = Field(default_factory=list)
    arms: list[ArmSection] = Field(default_factory=list)
    bench: BenchSection = Field(default_factory=BenchSection)
    discovery: DiscoverySection = Field(default_factory=DiscoverySection)
    finetune: FineTuneSection = Field(default_factory=FineTuneSection)
    arm: Optional[ArmSection] = None  # single-arm section for `generate`
    alpha: float = 0.5  # mix weight for `finetune` runs
    table_schema: Optional[SchemaSection] = Field(default=None, alias="schema")

    def to_bench_config(self) -> BenchConfig:
        if not self.datasets:
            raise ConfigError("bench config needs at least one dataset")
        if not self.arms:
            raise ConfigError("bench config needs at least one arm")
        return BenchConfig(
            datasets=tuple(d.to_spec() for d in self.datasets),
            arms=tuple(a.to_spec() for a in self.arms),
            folds=self.bench.folds,
            seed=self.seed,
            workers=self.bench.workers,
            time_budget_seconds=self.bench.time_budget_seconds,
            apply_zscore=self.bench.zscore,
            baseline=self.bench.baseline,
            discovery=self.discovery.to_config(),
            finetune=self.finetune.to_config(),
        )


def load_config(path: str | Path) -> RootConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(raw)


def parse_config(raw: dict) -> RootConfig:
    try:
        return RootConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
