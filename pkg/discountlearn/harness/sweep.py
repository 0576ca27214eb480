import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import structlog
import yaml
from pydantic import BaseModel

from discountlearn import config
from discountlearn.exceptions import ConfigurationError
from discountlearn.harness import audit, emit, runner
from discountlearn.harness.scenario import ScenarioSpec
from discountlearn.utils.enums import Algorithm, OutputFormat

log = structlog.get_logger(__name__)


class SweepResult(BaseModel):
    key: str
    value: Any
    path: str
    min_slack: float
    violated: bool


def parse_grid(grid: str) -> tuple[str, list[Any]]:
    """`discount.alpha=0.9,0.99,1` -> ("discount.alpha", [0.9, 0.99, 1])"""
    key, sep, raw = grid.partition("=")
    key = key.strip()
    if not sep or not key or not raw.strip():
        raise ConfigurationError(f"grid must look like KEY=V1,V2,...; got {grid!r}")
    values = [yaml.safe_load(v) for v in raw.split(",") if v.strip()]
    return key, values


def _file_name(algorithm: Algorithm, key: str, value: Any, fmt: OutputFormat) -> str:
    label = re.sub(r"[^A-Za-z0-9_.-]+", "_", f"{key}={value}")
    return f"{algorithm}-{label}.{fmt}"


def _run_one(
    spec: ScenarioSpec, algorithm: Algorithm, key: str, value: Any, path: str, fmt: OutputFormat
) -> SweepResult:
    # top level so the process pool can pickle it
    point = spec.with_override(key, value)
    trace = runner.run(spec=point, algorithm=algorithm)
    theorems = audit.trace_theorems(trace)
    summary = audit.audit(trace, theorems, point.tolerances)
    emit.emit(trace, fmt, path, summary)
    slacks = [a.min_slack for a in summary.theorems.values() if a.steps]
    return SweepResult(
        key=key,
        value=value,
        path=path,
        min_slack=min(slacks, default=float("inf")),
        violated=summary.violated,
    )


def run_sweep(
    spec: ScenarioSpec,
    algorithm: Algorithm,
    key: str,
    values: list[Any],
    out_dir: str | Path,
    fmt: OutputFormat = OutputFormat.CSV,
    workers: int = 0,
) -> list[SweepResult]:
    """
    One independent run per grid value, each written to its own file in
    `out_dir`. Runs go to a process pool when more than one worker is
    allowed; results come back in grid order.
    """
    # fail on a bad key before any process starts
    for value in values:
        spec.with_override(key, value)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or config.SWEEP_WORKERS
    jobs = [
        (spec, algorithm, key, v, str(out / _file_name(algorithm, key, v, fmt)), fmt)
        for v in values
    ]
    log.info("sweep started", key=key, points=len(jobs), workers=workers)
    if workers <= 1 or len(jobs) <= 1:
        results = [_run_one(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            futures = [pool.submit(_run_one, *job) for job in jobs]
            results = [f.result() for f in futures]
    log.info("sweep finished", key=key, violated=sum(r.violated for r in results))
    return results
