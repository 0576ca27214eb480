import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from discountlearn import instrumentation, metrics
from discountlearn.aggregation.engines import all_engines, get_engine
from discountlearn.discounting import DiscountLedger
from discountlearn.exceptions import ConfigurationError
from discountlearn.harness.experts import build_experts
from discountlearn.harness.reality import CsvReality, build_reality
from discountlearn.harness.scenario import ScenarioSpec
from discountlearn.utils.enums import Algorithm, RealityKind

log = structlog.get_logger(__name__)


class AuditRecord(BaseModel):
    """One protocol step: the discount state, the losses and every bound the engine carries."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    t: int
    alpha: float
    beta: float
    B_over_beta: float
    prediction: float = float("nan")
    outcome: float = float("nan")
    learner_loss: float
    best_expert_loss: float
    bound: float
    slack: float
    comparator_losses: dict[str, float] = {}
    bounds: dict[str, float] = {}
    slacks: dict[str, float] = {}


class Trace(BaseModel):
    """
    The records of one run. Traces read back from a csv file carry no run
    metadata and audit their single `bound` column as the primary bound.
    """

    algorithm: Algorithm | None = None
    primary: str = "bound"
    seed: int = 0
    horizon: int = 0
    records: list[AuditRecord] = []


def check_compatibility(spec: ScenarioSpec, algorithm: Algorithm, regression: bool) -> list[str]:
    violations: list[str] = []
    if regression:
        if spec.reality.kind not in (RealityKind.LINEAR, RealityKind.CSV):
            violations.append(f"{algorithm} needs inputs; use a linear or csv reality")
    else:
        if not spec.experts:
            violations.append(f"{algorithm} needs at least one expert")
        if spec.reality.kind == RealityKind.LINEAR:
            violations.append(f"{algorithm} competes with experts, not with a linear reality")
    return violations


@metrics.time(instrumentation.RUN_DURATION, algorithm="algorithm")
def run(spec: ScenarioSpec, algorithm: Algorithm) -> Trace:
    """
    Plays the protocol for `spec.horizon` steps: the accountant announces α,
    the experts (or the inputs) are revealed, the learner predicts, reality
    answers and everything is recorded. Same spec and seed, same trace.
    """
    engine_cls = next((e for e in all_engines() if e.id() == algorithm), None)
    if engine_cls is None:
        raise ConfigurationError(f"unknown algorithm {algorithm}")
    violations = check_compatibility(spec, algorithm, engine_cls.regression())
    violations += engine_cls.check(spec.game, spec.algorithm)
    if violations:
        raise ConfigurationError(f"{algorithm} cannot run this scenario", violations=violations)

    reality = build_reality(spec.reality, spec.game, spec.horizon, spec.features, spec.seed)
    dim = spec.features.dim
    if isinstance(reality, CsvReality) and engine_cls.regression():
        if reality.dim == 0:
            raise ConfigurationError("data file has no x1..xn columns for regression")
        dim = reality.dim
    experts = build_experts(spec.experts, spec.game, spec.seed)
    alphas = spec.discount.schedule(spec.horizon, np.random.default_rng([spec.seed, 2]))
    engine = get_engine(
        algorithm,
        spec.game,
        spec.algorithm,
        n_experts=len(experts),
        dim=dim,
        seed=spec.seed,
    )

    trace = Trace(
        algorithm=algorithm, primary=engine.primary(), seed=spec.seed, horizon=spec.horizon
    )
    ledger = DiscountLedger()
    steps = instrumentation.PROTOCOL_STEPS.labels(algorithm=str(algorithm))
    with structlog.contextvars.bound_contextvars(
        run_id=f"{algorithm}-{spec.seed}", algorithm=str(algorithm), seed=spec.seed
    ):
        log.info("run started", engine=engine.name(), horizon=spec.horizon, experts=len(experts))
        try:
            for t in range(1, spec.horizon + 1):
                carried = reality.alpha(t)
                alpha = carried if carried is not None else alphas[t - 1]
                x = reality.inputs(t)
                signal = reality.signal(t)
                preds = [e.predict(t, signal) for e in experts]
                gamma = engine.predict(alpha, preds, x)
                omega = reality.outcome(t, gamma)
                engine.update(alpha, preds, x, gamma, omega)
                ledger = ledger.advance(alpha)
                report = engine.report()
                primary = engine.primary()
                trace.records.append(
                    AuditRecord(
                        t=t,
                        alpha=alpha,
                        beta=ledger.beta,
                        B_over_beta=ledger.ratio,
                        prediction=gamma,
                        outcome=omega,
                        learner_loss=report.learner_loss,
                        best_expert_loss=report.best_expert_loss,
                        bound=report.bounds[primary],
                        slack=report.slacks[primary],
                        comparator_losses=report.comparator_losses,
                        bounds={str(k): v for k, v in report.bounds.items()},
                        slacks={str(k): v for k, v in report.slacks.items()},
                    )
                )
                steps.inc()
        finally:
            engine.close()
        last = trace.records[-1]
        log.info("run finished", steps=len(trace.records), slack=last.slack)
    return trace
