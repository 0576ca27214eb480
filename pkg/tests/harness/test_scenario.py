import unittest
from pathlib import Path

import numpy as np
import pytest

from discountlearn.exceptions import ConfigurationError
from discountlearn.harness.scenario import DiscountSpec, load_scenario, parse_scenario
from discountlearn.utils.enums import DiscountKind, GameKind

EXAMPLES = Path(__file__).parents[2] / "docs" / "examples"

MINIMAL = """
game: {kind: square}
experts:
  - {kind: constant, value: 0.2}
horizon: 5
"""


class TestParse(unittest.TestCase):
    def test_defaults(self):
        spec = parse_scenario(MINIMAL)
        self.assertEqual(spec.game.kind, GameKind.SQUARE)
        self.assertEqual(spec.game.eta, 2.0)
        self.assertEqual(spec.discount.kind, DiscountKind.CONSTANT)
        self.assertEqual(spec.seed, 0)
        self.assertEqual(len(spec.experts), 1)

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError) as ctx:
            parse_scenario(MINIMAL + "colour: blue\n")
        self.assertIn("colour", str(ctx.exception))

    def test_not_a_mapping(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario("- 1\n- 2\n")

    def test_bad_yaml(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario("game: {kind: square\n")

    def test_alpha_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario(MINIMAL + "discount: {alpha: 1.5}\n")

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_scenario("no/such/scenario.yaml")

    def test_data_path_next_to_scenario(self):
        spec = load_scenario(EXAMPLES / "regression_csv.yaml")
        self.assertEqual(Path(spec.reality.path or ""), EXAMPLES / "stream.csv")


class TestOverride(unittest.TestCase):
    def test_nested_key(self):
        spec = parse_scenario(MINIMAL).with_override("discount.alpha", 0.5)
        self.assertEqual(spec.discount.alpha, 0.5)

    def test_game_constants_follow_interval(self):
        spec = parse_scenario(MINIMAL).with_override("game.y_hi", 2.0)
        self.assertEqual(spec.game.eta, 0.5)

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario(MINIMAL).with_override("discount.beta", 0.5)
        with self.assertRaises(ConfigurationError):
            parse_scenario(MINIMAL).with_override("nothing.here", 1)

    def test_invalid_value(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario(MINIMAL).with_override("horizon", 0)


class TestSchedule(unittest.TestCase):
    rng = np.random.default_rng(0)

    def test_constant(self):
        self.assertEqual(DiscountSpec(alpha=0.9).schedule(3, self.rng), [0.9, 0.9, 0.9])

    def test_list_too_short(self):
        spec = DiscountSpec(kind=DiscountKind.LIST, alphas=[1.0, 0.5])
        self.assertEqual(spec.schedule(2, self.rng), [1.0, 0.5])
        with self.assertRaises(ConfigurationError):
            spec.schedule(3, self.rng)

    def test_restart(self):
        spec = DiscountSpec(kind=DiscountKind.RESTART, restart_steps=[2, 4], restart_alpha=0.1)
        self.assertEqual(spec.schedule(5, self.rng), [1.0, 0.1, 1.0, 0.1, 1.0])

    def test_random_is_seeded(self):
        spec = DiscountSpec(kind=DiscountKind.RANDOM, low=0.6, high=0.8)
        first = spec.schedule(50, np.random.default_rng(3))
        self.assertEqual(first, spec.schedule(50, np.random.default_rng(3)))
        self.assertTrue(all(0.6 <= a <= 0.8 for a in first))

    def test_low_above_high(self):
        with self.assertRaises(ValueError):
            DiscountSpec(low=0.9, high=0.5)


@pytest.mark.parametrize("name", sorted(p.name for p in EXAMPLES.glob("*.yaml")))
def test_shipped_examples_load(name: str):
    spec = load_scenario(EXAMPLES / name)
    assert spec.horizon >= 1
