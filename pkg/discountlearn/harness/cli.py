import argparse
import sys
from typing import Sequence

import structlog

from discountlearn import config, instrumentation
from discountlearn.exceptions import ConfigurationError, DiscountLearnError
from discountlearn.harness import audit, emit, runner, sweep
from discountlearn.harness.scenario import load_scenario
from discountlearn.logging import init as init_logging
from discountlearn.utils.enums import Algorithm, OutputFormat

log = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


def _theorems(raw: str | None) -> list[str] | None:
    if raw is None:
        return None
    return [t.strip() for t in raw.split(",") if t.strip()]


def cmd_run(args: argparse.Namespace) -> int:
    spec = load_scenario(args.config)
    if args.seed is not None:
        spec = spec.with_override("seed", args.seed)
    trace = runner.run(spec=spec, algorithm=args.algo)
    summary = audit.audit(trace, audit.trace_theorems(trace), spec.tolerances)
    fmt = OutputFormat(args.format)
    if args.out:
        emit.emit(trace, fmt, args.out, summary)
    else:
        sys.stdout.write(emit.render(trace, fmt, summary))
    return EXIT_VIOLATION if summary.violated else EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    trace = emit.read_trace(args.trace)
    theorems = _theorems(args.theorems)
    if theorems is None:
        theorems = audit.trace_theorems(trace)
    default = args.tolerance if args.tolerance is not None else audit.DEFAULT_TOLERANCE
    summary = audit.audit(trace, theorems, default_tolerance=default)
    for entry in summary.theorems.values():
        sys.stdout.write(
            f"{entry.theorem}\tmin_slack={entry.min_slack:.6g}\tstep={entry.min_step}"
            f"\tfirst_violation={entry.first_violation}\n"
        )
    return EXIT_VIOLATION if summary.violated else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_scenario(args.config)
    key, values = sweep.parse_grid(args.grid)
    if not values:
        raise ConfigurationError("grid has no values", violations=[args.grid])
    results = sweep.run_sweep(
        spec,
        args.algo,
        key,
        values,
        args.out,
        fmt=OutputFormat(args.format),
        workers=args.workers,
    )
    for r in results:
        sys.stdout.write(f"{r.key}={r.value}\tmin_slack={r.min_slack:.6g}\t{r.path}\n")
    return EXIT_VIOLATION if any(r.violated for r in results) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=config.APP_NAME,
        description="Prediction with expert advice under discounted loss, with bound audits.",
    )
    parser.add_argument("--version", action="version", version=config.VERSION)
    parser.add_argument("--metrics", default="", help="write prometheus metrics to this file")
    parser.add_argument(
        "--log-level", choices=["debug", "info", "warning", "error"], help="default LOG_LEVEL"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    algos = [str(a) for a in Algorithm]
    formats = [str(f) for f in OutputFormat]

    run = sub.add_parser("run", help="play one scenario and write its trace")
    run.add_argument("--config", required=True, help="scenario yaml")
    run.add_argument("--algo", required=True, choices=algos, type=Algorithm)
    run.add_argument("--out", help="trace file; stdout when omitted")
    run.add_argument("--format", choices=formats, default=config.DEFAULT_FORMAT)
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.set_defaults(func=cmd_run)

    aud = sub.add_parser("audit", help="check a trace file against its bounds")
    aud.add_argument("--trace", required=True, help="csv or json trace")
    aud.add_argument("--theorems", help="comma separated; default every bound in the trace")
    aud.add_argument("--tolerance", type=float, help="tolerance for bounds without a default")
    aud.set_defaults(func=cmd_audit)

    sw = sub.add_parser("sweep", help="run a scenario over a grid of one key")
    sw.add_argument("--config", required=True, help="scenario yaml")
    sw.add_argument("--grid", required=True, help="KEY=V1,V2,... e.g. discount.alpha=0.9,0.99")
    sw.add_argument("--algo", required=True, choices=algos, type=Algorithm)
    sw.add_argument("--out", default="sweep", help="directory for the per-run traces")
    sw.add_argument("--format", choices=formats, default=config.DEFAULT_FORMAT)
    sw.add_argument("--workers", type=int, default=0, help="default SWEEP_WORKERS")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    init_logging(args.log_level)
    try:
        status = args.func(args)
    except DiscountLearnError as err:
        log.error("command failed", command=args.command, error=str(err))
        sys.stderr.write(f"error: {err}\n")
        return EXIT_ERROR
    finally:
        instrumentation.write(args.metrics)
    log.debug("command finished", command=args.command, status=status)
    return status


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
