"""Request/response models for the HTTP service.

Paths in requests refer to the service host's filesystem; the CLI runs the
service in-process by default, so paths behave like local CLI arguments.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import (
    ArmSection,
    BenchSection,
    DatasetSection,
    DiscoverySection,
    FineTuneSection,
    SchemaSection,
)


class ServiceModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class HealthResponse(ServiceModel):
    status: str
    version: str


class DiscoverRequest(ServiceModel):
    data_csv: str
    out_dir: str
    seed: int = 0
    table_schema: Optional[SchemaSection] = Field(default=None, alias="schema")
    discovery: DiscoverySection = Field(default_factory=DiscoverySection)


class DiscoverResponse(ServiceModel):
    adjacency_csv: str
    runs_json: str
    columns: list[str]
    n_runs: int
    n_completed: int


class GenerateRequest(ServiceModel):
    data_csv: str
    out_dir: str
    seed: int = 0
    table_schema: Optional[SchemaSection] = Field(default=None, alias="schema")
    arm: ArmSection
    adjacency_csv: Optional[str] = None
    discovery: DiscoverySection = Field(default_factory=DiscoverySection)


class GenerateResponse(ServiceModel):
    synthetic_csv: str
    manifest_json: str
    n_rows: int
    arm: str


class FinetuneRequest(ServiceModel):
    train_csv: str
    val_csv: str
    out_dir: str
    seed: int = 0
    synthetic: Optional[str] = None  # synthetic CSV or a generate manifest JSON
    alpha: float = 0.5
    table_schema: Optional[SchemaSection] = Field(default=None, alias="schema")
    finetune: FineTuneSection = Field(default_factory=FineTuneSection)


class FinetuneResponse(ServiceModel):
    history_json: str
    weight_distance_json: str
    checkpoint: str
    best_step: int
    stopped_reason: str
    val_log_loss: float
    val_roc_auc: float


class BenchRequest(ServiceModel):
    out_dir: str
    seed: int = 0
    workers: int = 1
    resume: bool = False
    datasets: list[DatasetSection]
    arms: list[ArmSection]
    bench: BenchSection = Field(default_factory=BenchSection)
    discovery: DiscoverySection = Field(default_factory=DiscoverySection)
    finetune: FineTuneSection = Field(default_factory=FineTuneSection)


class BenchResponse(ServiceModel):
    records_csv: str
    summary_json: str
    n_records: int
    n_completed: int
    n_failed: int


class ReportRequest(ServiceModel):
    records: str  # records.csv, records.jsonl, or a directory holding either
    out_dir: str


class ReportResponse(ServiceModel):
    files: dict[str, str]
    n_records: int
