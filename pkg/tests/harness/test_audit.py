import unittest

from discountlearn.harness import audit, runner
from discountlearn.harness.runner import AuditRecord, Trace
from discountlearn.harness.scenario import Tolerances, parse_scenario
from discountlearn.instrumentation import registry
from discountlearn.utils.enums import Algorithm

SCENARIO = """
game: {kind: square}
experts:
  - {kind: constant, value: 0.3}
  - {kind: noisy_oracle, noise: 0.1}
reality: {kind: adversarial}
discount: {kind: random, low: 0.7}
horizon: 30
seed: 5
"""


def record(t: int, loss: float, bound: float) -> AuditRecord:
    return AuditRecord(
        t=t,
        alpha=1.0,
        beta=1.0,
        B_over_beta=float(t),
        learner_loss=loss,
        best_expert_loss=loss,
        bound=bound,
        slack=bound - loss,
        bounds={"bound": bound},
        slacks={"bound": bound - loss},
    )


class TestAudit(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.trace = runner.run(spec=parse_scenario(SCENARIO), algorithm=Algorithm.AAD)

    def test_clean_run(self):
        summary = audit.audit(self.trace, audit.trace_theorems(self.trace))
        self.assertFalse(summary.violated)
        self.assertIsNone(summary.first_violation())
        self.assertEqual(set(summary.theorems), {"aad", "weights"})
        self.assertEqual(summary.theorems["aad"].tolerance, Tolerances().aad)
        self.assertEqual(summary.theorems["aad"].steps, 30)

    def test_min_slack_exported(self):
        summary = audit.audit(self.trace, ["aad"])
        value = registry().get_sample_value("audit_min_slack", {"theorem": "aad"})
        self.assertEqual(value, summary.theorems["aad"].min_slack)

    def test_empty_theorem_list(self):
        summary = audit.audit(self.trace, [])
        self.assertEqual(summary.theorems, {})
        self.assertFalse(summary.violated)

    def test_corrupted_record_is_reported(self):
        trace = self.trace.model_copy(deep=True)
        bad = trace.records[11]
        trace.records[11] = bad.model_copy(update={"learner_loss": bad.bounds["aad"] + 1.0})
        summary = audit.audit(trace, ["aad"])
        self.assertTrue(summary.violated)
        self.assertEqual(summary.first_violation(), 12)
        entry = summary.theorems["aad"]
        self.assertEqual((entry.violations, entry.min_step), (1, 12))
        self.assertAlmostEqual(entry.min_slack, -1.0)

    def test_unknown_theorem(self):
        summary = audit.audit(self.trace, ["quantile"])
        self.assertEqual(summary.theorems["quantile"].steps, 0)
        self.assertFalse(summary.violated)


class TestTolerance(unittest.TestCase):
    def test_within_tolerance(self):
        trace = Trace(records=[record(1, 1.0, 1.0 - 5e-7), record(2, 1.0, 1.0 - 2e-6)])
        summary = audit.audit(trace, ["bound"])
        self.assertEqual(summary.theorems["bound"].tolerance, audit.DEFAULT_TOLERANCE)
        self.assertEqual(summary.first_violation(), 2)

    def test_default_tolerance_override(self):
        trace = Trace(records=[record(1, 1.0, 1.0 - 2e-6)])
        summary = audit.audit(trace, ["bound"], default_tolerance=1e-5)
        self.assertFalse(summary.violated)

    def test_carried_margin(self):
        rec = record(1, 1.0, 2.0).model_copy(update={"slacks": {"threshold": -0.5}})
        self.assertEqual(audit.slack_of(rec, "threshold"), -0.5)
        self.assertEqual(audit.slack_of(rec, "bound"), 1.0)
        self.assertIsNone(audit.slack_of(rec, "mixed"))
