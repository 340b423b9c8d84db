"""FastAPI application exposing the pipeline operations.

Handlers are synchronous (FastAPI runs them in its worker pool); all heavy
lifting happens in the core package. Configuration and data errors map to
HTTP 400, unexpected failures to 500.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import metadata
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from ..bench import BenchConfig, emit_reports, parse_records_csv, run_benchmark
from ..bench import RunRecord
from ..config import SchemaSection
from ..discovery.ensemble import (
    read_adjacency_csv,
    run_discovery_ensemble,
    write_adjacency_csv,
)
from ..errors import CausalMixError, ConfigError
from ..finetune import (
    FineTuneConfig,
    ReferenceModel,
    evaluate_model,
    finetune,
    save_checkpoint,
    weight_distance,
)
from ..generators import (
    MixPlan,
    generate_mixed_model,
    generate_table_augment,
)
from ..scm import fit_scm, force_target_sink, sample_dag, sample_scm
from ..seeds import child_rng, stable_key
from ..tables import Table, encode_categoricals, encode_jointly, impute, load_dataset, write_csv
from .schemas import (
    BenchRequest,
    BenchResponse,
    DiscoverRequest,
    DiscoverResponse,
    FinetuneRequest,
    FinetuneResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    ReportRequest,
    ReportResponse,
)


def _load_table(path: str, sidecar: SchemaSection | None) -> Table:
    target = sidecar.target if sidecar else None
    kinds = sidecar.columns if sidecar and sidecar.columns else None
    table = load_dataset(path, target=target, column_kinds=kinds)
    table, _ = encode_categoricals(table)
    return table


def _prepared(path: str, sidecar: SchemaSection | None) -> Table:
    table = _load_table(path, sidecar)
    table, _ = impute(table)
    return table


def create_app() -> FastAPI:
    try:
        version = metadata.version("causalmix")
    except metadata.PackageNotFoundError:  # pragma: no cover
        version = "0.0.0"
    app = FastAPI(title="causalmix", version=version)

    @app.exception_handler(CausalMixError)
    async def _domain_error(_, exc: CausalMixError):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=version)

    @app.post("/discover", response_model=DiscoverResponse)
    def discover(req: DiscoverRequest) -> DiscoverResponse:
        table = _prepared(req.data_csv, req.table_schema)
        result = run_discovery_ensemble(
            table,
            req.discovery.n_runs,
            base_seed=req.seed,
            config=req.discovery.to_config(),
        )
        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        adjacency_csv = out_dir / "adjacency.csv"
        runs_json = out_dir / "discovery_runs.json"
        write_adjacency_csv(result.adjacency, adjacency_csv)
        runs_json.write_text(
            json.dumps(
                [dataclasses.asdict(run) for run in result.runs],
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        return DiscoverResponse(
            adjacency_csv=str(adjacency_csv),
            runs_json=str(runs_json),
            columns=list(result.adjacency.column_names or ()),
            n_runs=result.adjacency.total_runs,
            n_completed=sum(1 for r in result.runs if r.completed),
        )

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        arm = req.arm.to_spec()
        table = _prepared(req.data_csv, req.table_schema)
        rng = child_rng(req.seed, stable_key(arm.name))
        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest: dict = {"arm": arm.name, "kind": arm.kind, "seed": req.seed}

        if arm.kind == "default":
            synthetic = table
        elif arm.kind == "table_augment":
            synthetic = generate_table_augment(table, arm.table_augment, rng)
            manifest["columns"] = list(synthetic.schema.names)
            manifest["target"] = synthetic.schema.target_name
        elif arm.kind == "mixed_model":
            synthetic = generate_mixed_model(table, rng, n_synthetic=arm.n_synthetic)
        elif arm.kind in ("scm", "causal_mix"):
            if req.adjacency_csv:
                adjacency = read_adjacency_csv(req.adjacency_csv, total_runs=req.discovery.n_runs)
            else:
                adjacency = run_discovery_ensemble(
                    table,
                    req.discovery.n_runs,
                    base_seed=req.seed,
                    config=req.discovery.to_config(),
                ).adjacency
            dag = sample_dag(adjacency, rng)
            if arm.target_as_child:
                dag = force_target_sink(dag, table.schema.target_index)
            scm = fit_scm(dag, table, arm.tier, rng)
            synthetic = sample_scm(scm, arm.n_synthetic, rng)
            manifest["tier"] = arm.tier.value
            manifest["dag_edges"] = [list(e) for e in dag.edges]
            families = {}
            for node, mech in enumerate(scm.mechanisms):
                model = getattr(mech, "model", None)
                families[table.schema.names[node]] = (
                    model.spec.family.value if model is not None else "root"
                )
            manifest["node_families"] = families
        else:  # pragma: no cover
            raise ConfigError(f"unimplemented arm {arm.kind!r}")

        synthetic_csv = out_dir / "synthetic.csv"
        write_csv(synthetic, synthetic_csv)
        manifest["synthetic_csv"] = str(synthetic_csv)
        manifest["n_rows"] = synthetic.n
        manifest_json = out_dir / "manifest.json"
        manifest_json.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        return GenerateResponse(
            synthetic_csv=str(synthetic_csv),
            manifest_json=str(manifest_json),
            n_rows=synthetic.n,
            arm=arm.name,
        )

    @app.post("/finetune", response_model=FinetuneResponse)
    def run_finetune(req: FinetuneRequest) -> FinetuneResponse:
        train = _load_table(req.train_csv, req.table_schema)
        val = _load_table(req.val_csv, req.table_schema)
        synthetic = None
        if req.synthetic:
            syn_path = req.synthetic
            if syn_path.endswith(".json"):
                manifest = json.loads(Path(syn_path).read_text())
                syn_path = manifest["synthetic_csv"]
            synthetic = _load_table(syn_path, req.table_schema)
        tables = [train, val] + ([synthetic] if synthetic is not None else [])
        tables, _ = encode_jointly(tables)
        train, val = tables[0], tables[1]
        synthetic = tables[2] if len(tables) > 2 else None
        train, stats = impute(train)
        val, _ = impute(val, stats)
        if synthetic is not None:
            synthetic, _ = impute(synthetic, stats)

        labels = np.unique(
            np.concatenate(
                [t.numeric_data()[:, t.schema.target_index] for t in (train, val)]
            )
        )
        model = ReferenceModel.initialize(
            len(train.schema.feature_indices()),
            labels,
            child_rng(req.seed, stable_key("model-init")),
        )
        plan = MixPlan(real=train, synthetic=synthetic, alpha=req.alpha)
        cfg: FineTuneConfig = req.finetune.to_config()
        best, history = finetune(model, plan, val, cfg, child_rng(req.seed, stable_key("finetune")))

        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        history_json = out_dir / "history.json"
        history_json.write_text(
            json.dumps(
                {
                    "best_step": history.best_step,
                    "stopped_reason": history.stopped_reason.value,
                    "steps": [dataclasses.asdict(s) for s in history.steps],
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        report = weight_distance(best)
        weight_json = out_dir / "weight_distance.json"
        weight_json.write_text(
            json.dumps(
                {
                    "total": report.total,
                    "per_layer": {name: dist for name, dist in report.per_layer},
                    "per_component": report.per_component,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        checkpoint = out_dir / "model.ckpt"
        save_checkpoint(best, checkpoint)
        val_ll, val_auc = evaluate_model(best, val)
        return FinetuneResponse(
            history_json=str(history_json),
            weight_distance_json=str(weight_json),
            checkpoint=str(checkpoint),
            best_step=history.best_step,
            stopped_reason=history.stopped_reason.value,
            val_log_loss=val_ll,
            val_roc_auc=val_auc,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        cfg = BenchConfig(
            datasets=tuple(d.to_spec() for d in req.datasets),
            arms=tuple(a.to_spec() for a in req.arms),
            folds=req.bench.folds,
            seed=req.seed,
            workers=req.workers if req.workers else req.bench.workers,
            time_budget_seconds=req.bench.time_budget_seconds,
            apply_zscore=req.bench.zscore,
            baseline=req.bench.baseline,
            discovery=req.discovery.to_config(),
            finetune=req.finetune.to_config(),
        )
        records = run_benchmark(cfg, req.out_dir, resume=req.resume)
        paths = emit_reports(records, req.out_dir)
        n_completed = sum(1 for r in records if r.completed)
        return BenchResponse(
            records_csv=str(paths["records"]),
            summary_json=str(paths["summary"]),
            n_records=len(records),
            n_completed=n_completed,
            n_failed=len(records) - n_completed,
        )

    @app.post("/report", response_model=ReportResponse)
    def report(req: ReportRequest) -> ReportResponse:
        source = Path(req.records)
        if source.is_dir():
            csv_path = source / "records.csv"
            jsonl_path = source / "records.jsonl"
            source = csv_path if csv_path.exists() else jsonl_path
        if not source.exists():
            raise HTTPException(status_code=400, detail=f"no records found at {req.records}")
        if source.suffix == ".jsonl":
            records = [
                RunRecord(**json.loads(line))
                for line in source.read_text().splitlines()
                if line.strip()
            ]
        else:
            records = parse_records_csv(source)
        paths = emit_reports(records, req.out_dir)
        return ReportResponse(
            files={name: str(path) for name, path in paths.items()},
            n_records=len(records),
        )

    return app
