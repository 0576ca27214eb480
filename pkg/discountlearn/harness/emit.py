import io
from pathlib import Path

import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, ValidationError

from discountlearn.exceptions import ConfigurationError
from discountlearn.harness.audit import AuditSummary
from discountlearn.harness.runner import AuditRecord, Trace
from discountlearn.utils.enums import OutputFormat

log = structlog.get_logger(__name__)

SCHEMA_VERSION = "1"
CSV_COLUMNS = [
    "t",
    "alpha",
    "beta",
    "B_over_beta",
    "learner_loss",
    "best_expert_loss",
    "bound",
    "slack",
]


class TraceReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    schema_version: str = SCHEMA_VERSION
    trace: Trace
    summary: AuditSummary | None = None


def to_frame(trace: Trace) -> pd.DataFrame:
    rows = [[getattr(r, c) for c in CSV_COLUMNS] for r in trace.records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def render(trace: Trace, fmt: OutputFormat, summary: AuditSummary | None = None) -> str:
    if fmt == OutputFormat.JSON:
        report = TraceReport(trace=trace, summary=summary)
        return report.model_dump_json(indent=2) + "\n"
    buf = io.StringIO()
    to_frame(trace).to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    return buf.getvalue()


def emit(
    trace: Trace, fmt: OutputFormat, path: str | Path, summary: AuditSummary | None = None
) -> Path:
    """Write the trace (and the audit summary, json only) to `path`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render(trace, fmt, summary))
    log.info("trace written", path=str(target), format=str(fmt), records=len(trace.records))
    return target


def _from_csv(path: Path) -> Trace:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path} is not a trace file", violations=missing)
    records = [
        AuditRecord(
            t=int(row.t),
            alpha=row.alpha,
            beta=row.beta,
            B_over_beta=row.B_over_beta,
            learner_loss=row.learner_loss,
            best_expert_loss=row.best_expert_loss,
            bound=row.bound,
            slack=row.slack,
            bounds={"bound": row.bound},
            slacks={"bound": row.slack},
        )
        for row in frame.itertuples(index=False)
    ]
    return Trace(horizon=len(records), records=records)


def read_trace(path: str | Path) -> Trace:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"trace file not found: {p}")
    if p.suffix.lower() != ".json":
        return _from_csv(p)
    try:
        report = TraceReport.model_validate_json(p.read_text())
    except ValidationError as err:
        raise ConfigurationError(
            f"{p} is not a trace file", violations=[e["msg"] for e in err.errors()]
        ) from err
    if report.schema_version != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported trace schema {report.schema_version}",
            violations=[f"expected {SCHEMA_VERSION}"],
        )
    return report.trace
