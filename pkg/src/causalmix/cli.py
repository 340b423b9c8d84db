"""Command-line client for the pipeline service.

Each subcommand builds a request from the config file and flags, submits it
to the HTTP service (in-process by default, or a remote instance via
--server), and prints the JSON response. Exit codes: 0 success, 2 config
error, 3 benchmark sweep finished with failed runs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .config import RootConfig, load_config
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SWEEP_FAILURES = 3


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    import asyncio

    from .service.app import create_app

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://causalmix.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(call())


def _load(config_path: str | None) -> RootConfig:
    try:
        if config_path is None:
            return RootConfig()
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _post(server: str | None, path: str, payload: dict) -> dict:
    response = _request(server, path, payload)
    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        click.echo(f"config error: {detail}", err=True)
        sys.exit(EXIT_CONFIG)
    if response.status_code != 200:
        click.echo(f"error {response.status_code}: {response.text}", err=True)
        sys.exit(1)
    body = response.json()
    click.echo(json.dumps(body, indent=2, sort_keys=True))
    return body


def _schema_payload(cfg: RootConfig) -> dict | None:
    if cfg.table_schema is not None:
        return cfg.table_schema.model_dump(by_alias=True)
    if cfg.datasets and cfg.datasets[0].table_schema is not None:
        return cfg.datasets[0].table_schema.model_dump(by_alias=True)
    return None


@click.group()
def main() -> None:
    """Causal-structure-aware data generation and fine-tuning benchmark."""


@main.command()
@click.option("--data", "data_csv", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None, help="remote service URL; default runs in-process")
def discover(data_csv, config_path, out_dir, seed, server) -> None:
    """Run the discovery ensemble and write the edge-frequency matrix."""
    cfg = _load(config_path)
    payload = {
        "data_csv": data_csv,
        "out_dir": out_dir,
        "seed": seed if seed is not None else cfg.seed,
        "schema": _schema_payload(cfg),
        "discovery": cfg.discovery.model_dump(),
    }
    _post(server, "/discover", payload)


@main.command()
@click.option("--data", "data_csv", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--arm", "arm_kind", default=None, help="arm kind when no config arm section is given")
@click.option("--adjacency", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None)
def generate(data_csv, config_path, arm_kind, adjacency, out_dir, seed, server) -> None:
    """Generate a synthetic table with one arm; writes CSV plus manifest."""
    cfg = _load(config_path)
    arm = cfg.arm
    if arm is None and arm_kind is not None:
        from .config import ArmSection

        arm = ArmSection(kind=arm_kind)
    if arm is None:
        click.echo("config error: no arm section and no --arm flag", err=True)
        sys.exit(EXIT_CONFIG)
    payload = {
        "data_csv": data_csv,
        "out_dir": out_dir,
        "seed": seed if seed is not None else cfg.seed,
        "schema": _schema_payload(cfg),
        "arm": arm.model_dump(by_alias=True),
        "adjacency_csv": adjacency,
        "discovery": cfg.discovery.model_dump(),
    }
    _post(server, "/generate", payload)


@main.command()
@click.option("--train", "train_csv", required=True, type=click.Path(exists=True))
@click.option("--val", "val_csv", required=True, type=click.Path(exists=True))
@click.option("--synthetic", default=None, type=click.Path(exists=True), help="synthetic CSV or generate manifest")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None)
def finetune(train_csv, val_csv, synthetic, config_path, out_dir, seed, server) -> None:
    """Fine-tune the reference model; writes history, weight report, checkpoint."""
    cfg = _load(config_path)
    payload = {
        "train_csv": train_csv,
        "val_csv": val_csv,
        "synthetic": synthetic,
        "alpha": cfg.alpha if synthetic else 1.0,
        "out_dir": out_dir,
        "seed": seed if seed is not None else cfg.seed,
        "schema": _schema_payload(cfg),
        "finetune": cfg.finetune.model_dump(),
    }
    _post(server, "/finetune", payload)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--resume", is_flag=True, default=False)
@click.option("--server", default=None)
def bench(config_path, out_dir, seed, workers, resume, server) -> None:
    """Run the datasets x folds x arms sweep and emit all report files."""
    cfg = _load(config_path)
    if not cfg.datasets or not cfg.arms:
        click.echo("config error: bench needs datasets and arms sections", err=True)
        sys.exit(EXIT_CONFIG)
    payload = {
        "out_dir": out_dir,
        "seed": seed if seed is not None else cfg.seed,
        "workers": workers if workers is not None else cfg.bench.workers,
        "resume": resume,
        "datasets": [d.model_dump(by_alias=True) for d in cfg.datasets],
        "arms": [a.model_dump(by_alias=True) for a in cfg.arms],
        "bench": cfg.bench.model_dump(),
        "discovery": cfg.discovery.model_dump(),
        "finetune": cfg.finetune.model_dump(),
    }
    body = _post(server, "/bench", payload)
    if body.get("n_failed", 0) > 0:
        sys.exit(EXIT_SWEEP_FAILURES)


@main.command()
@click.option("--records", required=True, type=click.Path(exists=True), help="records.csv/.jsonl or a directory")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--server", default=None)
def report(records, out_dir, server) -> None:
    """Recompute aggregate reports from stored run records."""
    _post(server, "/report", {"records": records, "out_dir": out_dir})


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8423)
def serve(host, port) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
