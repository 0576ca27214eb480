from typing import Iterable

import structlog
from pydantic import BaseModel, ConfigDict

from discountlearn import instrumentation
from discountlearn.harness.runner import AuditRecord, Trace
from discountlearn.harness.scenario import Tolerances

log = structlog.get_logger(__name__)

# for keys the tolerance table does not know, e.g. the bare `bound` column of a csv trace
DEFAULT_TOLERANCE = 1e-6


class TheoremAudit(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    theorem: str
    tolerance: float
    steps: int = 0
    min_slack: float = float("inf")
    min_step: int = 0
    first_violation: int | None = None
    violations: int = 0


class AuditSummary(BaseModel):
    theorems: dict[str, TheoremAudit] = {}

    @property
    def violated(self) -> bool:
        return any(a.violations for a in self.theorems.values())

    def first_violation(self) -> int | None:
        steps = [a.first_violation for a in self.theorems.values() if a.first_violation]
        return min(steps) if steps else None


def slack_of(record: AuditRecord, theorem: str) -> float | None:
    """
    bound − learner loss recomputed from the record, or the carried margin
    for invariants (weights, threshold) that have no bound. None when the
    record does not carry the theorem at this step.
    """
    if theorem in record.bounds:
        return record.bounds[theorem] - record.learner_loss
    return record.slacks.get(theorem)


def trace_theorems(trace: Trace) -> list[str]:
    """Every bound or margin the trace carries, in first-seen order."""
    seen: dict[str, None] = {}
    for r in trace.records:
        for key in list(r.bounds) + list(r.slacks):
            seen.setdefault(key, None)
    return list(seen)


def audit(
    trace: Trace,
    theorems: Iterable[str],
    tolerances: Tolerances | None = None,
    default_tolerance: float = DEFAULT_TOLERANCE,
) -> AuditSummary:
    tolerances = tolerances or Tolerances()
    summary = AuditSummary()
    for theorem in theorems:
        key = str(theorem)
        tol = tolerances.get(key) if key in Tolerances.model_fields else default_tolerance
        entry = TheoremAudit(theorem=key, tolerance=tol)
        for r in trace.records:
            slack = slack_of(r, key)
            if slack is None:
                continue
            entry.steps += 1
            if slack < entry.min_slack:
                entry.min_slack, entry.min_step = slack, r.t
            if slack < -tol:
                entry.violations += 1
                if entry.first_violation is None:
                    entry.first_violation = r.t
                    log.error("bound violated", theorem=key, step=r.t, slack=slack, tolerance=tol)
        if entry.steps:
            instrumentation.AUDIT_MIN_SLACK.labels(theorem=key).set(entry.min_slack)
        else:
            log.warning("theorem not carried by trace", theorem=key)
        summary.theorems[key] = entry
    log.info(
        "audit finished",
        theorems=len(summary.theorems),
        violated=summary.violated,
        first_violation=summary.first_violation(),
    )
    return summary
