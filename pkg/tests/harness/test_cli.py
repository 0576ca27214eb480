import logging
from pathlib import Path

import pandas as pd
import pytest

from discountlearn.harness import cli

EXAMPLES = Path(__file__).parents[2] / "docs" / "examples"

SCENARIO = """
game: {kind: square}
experts:
  - {kind: constant, value: 0.1}
  - {kind: constant, value: 0.9}
  - {kind: noisy_oracle, noise: 0.1}
discount: {kind: constant, alpha: 0.95}
horizon: 25
seed: 4
"""


@pytest.fixture
def scenario(tmp_path: Path) -> Path:
    path = tmp_path / "scenario.yaml"
    path.write_text(SCENARIO)
    return path


def test_run_to_stdout(scenario, capsys):
    assert cli.main(["run", "--config", str(scenario), "--algo", "aad"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,alpha,beta,B_over_beta,learner_loss,best_expert_loss,bound,slack"
    assert len(lines) == 26


def test_run_then_audit(scenario, tmp_path):
    out = tmp_path / "trace.csv"
    assert cli.main(["run", "--config", str(scenario), "--algo", "aad", "--out", str(out)]) == 0
    assert cli.main(["audit", "--trace", str(out)]) == cli.EXIT_OK


def test_audit_flags_violation(scenario, tmp_path, capsys):
    out = tmp_path / "trace.csv"
    cli.main(["run", "--config", str(scenario), "--algo", "aad", "--out", str(out)])
    frame = pd.read_csv(out)
    frame.loc[9, "learner_loss"] = frame.loc[9, "bound"] + 1
    frame.to_csv(out, index=False)
    capsys.readouterr()
    assert cli.main(["audit", "--trace", str(out)]) == cli.EXIT_VIOLATION
    assert "first_violation=10" in capsys.readouterr().out


def test_audit_json_with_seed_override(scenario, tmp_path):
    out = tmp_path / "trace.json"
    args = ["run", "--config", str(scenario), "--algo", "convex", "--format", "json"]
    assert cli.main(args + ["--seed", "8", "--out", str(out)]) == 0
    assert cli.main(["audit", "--trace", str(out), "--theorems", "convex,weights"]) == 0


def test_sweep(scenario, tmp_path, capsys):
    out = tmp_path / "sweep"
    args = ["sweep", "--config", str(scenario), "--algo", "aad", "--grid", "discount.alpha=0.5,1"]
    assert cli.main(args + ["--out", str(out), "--workers", "1"]) == cli.EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 2
    assert len(list(out.iterdir())) == 2


def test_metrics_file(scenario, tmp_path):
    metrics = tmp_path / "metrics.prom"
    cli.main(["--metrics", str(metrics), "run", "--config", str(scenario), "--algo", "aad"])
    assert "protocol_steps_total" in metrics.read_text()


def test_log_level(scenario):
    args = ["--log-level", "error", "run", "--config", str(scenario), "--algo", "aad"]
    assert cli.main(args) == cli.EXIT_OK
    assert logging.getLogger().level == logging.ERROR


def test_bad_config_exits_with_error(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.yaml"), "--algo", "aad"]) == 2
    assert "error: scenario file not found" in capsys.readouterr().err


def test_incompatible_pairing(scenario):
    assert cli.main(["run", "--config", str(scenario), "--algo", "fdfd"]) == cli.EXIT_ERROR


def test_regression_example(capsys):
    config = str(EXAMPLES / "regression_csv.yaml")
    assert cli.main(["run", "--config", config, "--algo", "linreg"]) == cli.EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 9


def test_unknown_algorithm():
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", "x.yaml", "--algo", "boosting"])


def test_negative_seed_is_rejected(scenario, capsys):
    args = ["run", "--config", str(scenario), "--algo", "aad", "--seed", "-1"]
    assert cli.main(args) == cli.EXIT_ERROR
    assert "seed" in capsys.readouterr().err


def test_non_numeric_data_file(tmp_path, capsys):
    (tmp_path / "stream.csv").write_text("x1,y\n0.1,0.3\n0.2,abc\n")
    config = tmp_path / "regression.yaml"
    config.write_text(
        "game: {kind: square}\nreality: {kind: csv, path: stream.csv}\nhorizon: 2\n"
    )
    assert cli.main(["run", "--config", str(config), "--algo", "linreg"]) == cli.EXIT_ERROR
    assert "non-numeric value in data file" in capsys.readouterr().err
