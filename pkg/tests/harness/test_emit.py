import json
import math

import pandas as pd
import pytest

from discountlearn.exceptions import ConfigurationError
from discountlearn.harness import audit, emit, runner
from discountlearn.harness.runner import Trace
from discountlearn.harness.scenario import parse_scenario
from discountlearn.utils.enums import Algorithm, OutputFormat

SCENARIO = """
game: {kind: square, binary: true}
experts:
  - {kind: noisy_oracle, noise: 0.2}
  - {kind: switching_oracle, period: 5}
discount: {kind: constant, alpha: 0.8}
horizon: 12
seed: 9
"""


@pytest.fixture(scope="module")
def trace() -> Trace:
    return runner.run(spec=parse_scenario(SCENARIO), algorithm=Algorithm.FDFD)


def test_empty_trace_is_header_only():
    text = emit.render(Trace(), OutputFormat.CSV)
    assert text == ",".join(emit.CSV_COLUMNS) + "\n"


def test_csv_rows(trace, tmp_path):
    path = emit.emit(trace, OutputFormat.CSV, tmp_path / "out" / "trace.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == emit.CSV_COLUMNS
    assert len(frame) == 12
    assert frame["t"].tolist() == list(range(1, 13))
    assert frame["slack"].tolist() == pytest.approx([r.slack for r in trace.records], rel=1e-15)


def test_csv_read_back(trace, tmp_path):
    path = emit.emit(trace, OutputFormat.CSV, tmp_path / "trace.csv")
    back = emit.read_trace(path)
    assert back.horizon == 12
    assert [r.bound for r in back.records] == [r.bound for r in trace.records]
    assert audit.trace_theorems(back) == ["bound"]


def test_json_round_trip(trace, tmp_path):
    summary = audit.audit(trace, audit.trace_theorems(trace))
    path = emit.emit(trace, OutputFormat.JSON, tmp_path / "trace.json", summary)
    raw = json.loads(path.read_text())
    assert raw["schema_version"] == emit.SCHEMA_VERSION
    assert raw["summary"]["theorems"]["quantile"]["steps"] == 12
    back = emit.read_trace(path)
    assert back.algorithm == Algorithm.FDFD
    assert back.records == trace.records


def test_json_keeps_infinities(tmp_path):
    summary = audit.audit(Trace(), ["aad"])
    assert math.isinf(summary.theorems["aad"].min_slack)
    path = emit.emit(Trace(), OutputFormat.JSON, tmp_path / "empty.json", summary)
    assert "Infinity" in path.read_text()
    assert emit.read_trace(path).records == []


def test_unsupported_schema(trace, tmp_path):
    path = tmp_path / "old.json"
    report = emit.TraceReport(schema_version="0", trace=trace)
    path.write_text(report.model_dump_json())
    with pytest.raises(ConfigurationError):
        emit.read_trace(path)


def test_not_a_trace(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        emit.read_trace(path)
    with pytest.raises(ConfigurationError):
        emit.read_trace(tmp_path / "missing.csv")
    broken = tmp_path / "broken.json"
    broken.write_text("{}")
    with pytest.raises(ConfigurationError):
        emit.read_trace(broken)
