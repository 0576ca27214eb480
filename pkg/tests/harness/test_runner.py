import math
import unittest
from pathlib import Path

import numpy as np
import pytest

from discountlearn.exceptions import ConfigurationError
from discountlearn.harness import audit, runner
from discountlearn.harness.scenario import (
    DiscountSpec,
    ScenarioSpec,
    load_scenario,
    parse_scenario,
)
from discountlearn.utils.enums import Algorithm

EXAMPLES = Path(__file__).parents[2] / "docs" / "examples"

SYMMETRIC_PAIR = """
game: {kind: square}
experts:
  - {kind: constant, value: 0.2}
  - {kind: constant, value: 0.8}
discount: {kind: random}
horizon: 1
seed: 42
"""


def shortened(name: str, horizon: int) -> ScenarioSpec:
    return load_scenario(EXAMPLES / name).model_copy(update={"horizon": horizon})


class TestRun(unittest.TestCase):
    def test_single_step(self):
        trace = runner.run(spec=parse_scenario(SYMMETRIC_PAIR), algorithm=Algorithm.AAD)
        self.assertEqual(len(trace.records), 1)
        first = trace.records[0]
        self.assertEqual((first.t, first.beta, first.B_over_beta), (1, 1.0, 1.0))
        self.assertAlmostEqual(first.prediction, 0.5, delta=1e-9)
        self.assertEqual(trace.primary, "aad")
        self.assertEqual(trace.algorithm, Algorithm.AAD)

    def test_same_seed_same_trace(self):
        spec = parse_scenario(SYMMETRIC_PAIR).model_copy(update={"horizon": 50})
        first = runner.run(spec=spec, algorithm=Algorithm.AAD)
        again = runner.run(spec=spec, algorithm=Algorithm.AAD)
        self.assertEqual(first.model_dump(), again.model_dump())

    def test_different_seed_different_trace(self):
        spec = parse_scenario(SYMMETRIC_PAIR).model_copy(update={"horizon": 20})
        first = runner.run(spec=spec, algorithm=Algorithm.AAD)
        other = runner.run(spec=spec.model_copy(update={"seed": 7}), algorithm=Algorithm.AAD)
        self.assertNotEqual(
            [r.alpha for r in first.records], [r.alpha for r in other.records]
        )

    def test_ratio_follows_schedule(self):
        spec = parse_scenario(SYMMETRIC_PAIR).model_copy(
            update={"discount": DiscountSpec(alpha=0.5), "horizon": 4}
        )
        trace = runner.run(spec=spec, algorithm=Algorithm.AAD)
        self.assertEqual([r.B_over_beta for r in trace.records], [1.0, 1.5, 1.75, 1.875])
        np.testing.assert_allclose([r.beta for r in trace.records], [1.0, 2.0, 4.0, 8.0])

    def test_csv_alphas_override_schedule(self):
        trace = runner.run(
            spec=load_scenario(EXAMPLES / "regression_csv.yaml"), algorithm=Algorithm.LINREG
        )
        self.assertEqual(len(trace.records), 8)
        self.assertEqual(trace.records[1].alpha, 0.9)


class TestCompatibility(unittest.TestCase):
    def test_regression_needs_inputs(self):
        with self.assertRaises(ConfigurationError):
            runner.run(spec=parse_scenario(SYMMETRIC_PAIR), algorithm=Algorithm.LINREG)

    def test_experts_required(self):
        spec = shortened("regression.yaml", 5)
        with self.assertRaises(ConfigurationError):
            runner.run(spec=spec, algorithm=Algorithm.AAD)

    def test_quantile_needs_binary_game(self):
        with self.assertRaises(ConfigurationError):
            runner.run(spec=parse_scenario(SYMMETRIC_PAIR), algorithm=Algorithm.FDFD)

    def test_absolute_loss_is_not_mixable(self):
        spec = shortened("convex_absolute.yaml", 5)
        with self.assertRaises(ConfigurationError):
            runner.run(spec=spec, algorithm=Algorithm.AAD)


@pytest.mark.parametrize(
    "name, algorithm, horizon",
    [
        ("aad_square.yaml", Algorithm.AAD, 300),
        ("aad_square.yaml", Algorithm.CONVEX, 300),
        ("convex_absolute.yaml", Algorithm.CONVEX, 450),
        ("fdfd_binary.yaml", Algorithm.FDFD, 120),
        ("fdfd_binary.yaml", Algorithm.AAD, 120),
        ("regression.yaml", Algorithm.LINREG, 80),
        ("regression.yaml", Algorithm.KERNREG, 60),
        ("regression.yaml", Algorithm.MIXED_A, 80),
        ("regression_csv.yaml", Algorithm.MIXED_A, 8),
    ],
)
def test_guarantees_hold(name: str, algorithm: Algorithm, horizon: int):
    spec = shortened(name, horizon)
    trace = runner.run(spec=spec, algorithm=algorithm)
    summary = audit.audit(trace, audit.trace_theorems(trace), spec.tolerances)
    assert not summary.violated, summary.model_dump()
    assert summary.theorems[str(trace.primary)].steps == horizon
    assert all(math.isfinite(r.learner_loss) for r in trace.records)
