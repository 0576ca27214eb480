import structlog
from prometheus_client import (
    CollectorRegistry,
    Counter,
    Gauge,
    Histogram,
    write_to_textfile,
)

from discountlearn import config

log = structlog.get_logger(__name__)

single_proc_registry = CollectorRegistry()


def registry() -> CollectorRegistry:
    return single_proc_registry


Gauge(
    name="build_info",
    documentation="build information",
    labelnames=["version"],
    registry=registry(),
).labels(version=config.BUILD_VERSION).set(1)

PROTOCOL_STEPS = Counter(
    name="protocol_steps",
    documentation="Protocol rounds played",
    labelnames=["algorithm"],
    registry=registry(),
)

RUN_DURATION = Histogram(
    name="protocol_run_duration_seconds",
    documentation="Duration of a full protocol run in seconds",
    labelnames=["algorithm"],
    registry=registry(),
)

AUDIT_MIN_SLACK = Gauge(
    name="audit_min_slack",
    documentation="Smallest slack seen by the last audit, per bound",
    labelnames=["theorem"],
    registry=registry(),
)


def init():
    return


def write(path: str = "") -> bool:
    """
    Dump the registry in the prometheus text format. Does nothing when no
    path is given and METRICS_PATH is unset.
    """
    target = path or config.METRICS_PATH
    if not target:
        return False
    write_to_textfile(target, registry())
    log.debug("wrote metrics", path=target)
    return True
