import math
import unittest

import numpy as np
import pytest

from discountlearn import discounting
from discountlearn.discounting import DiscountLedger
from discountlearn.exceptions import DomainError


def random_alphas(rng: np.random.Generator, size: int, low: float = 0.05) -> list[float]:
    return [float(a) for a in rng.uniform(low, 1.0, size=size)]


class TestAdvance(unittest.TestCase):
    def test_undiscounted(self):
        ledgers = discounting.ledger_from_alphas([1.0] * 5)
        self.assertEqual([led.beta for led in ledgers], [1.0] * 5)
        self.assertAlmostEqual(ledgers[-1].big_b, 5.0)

    def test_first_alpha_is_ignored(self):
        ledgers = discounting.ledger_from_alphas([0.1, 0.5, 0.8])
        betas = [led.beta for led in ledgers]
        np.testing.assert_allclose(betas, [1.0, 2.0, 2.5])
        self.assertAlmostEqual(ledgers[-1].big_b, 5.5)

    def test_constant_half(self):
        last = discounting.ledger_from_alphas([0.5] * 3)[-1]
        self.assertAlmostEqual(last.beta, 4.0)
        self.assertAlmostEqual(last.big_b, 7.0)
        self.assertAlmostEqual(last.ratio, 1.75)
        self.assertLessEqual(last.ratio, 1 / (1 - 0.5))

    def test_rejects_zero_and_above_one(self):
        for alpha in (0.0, -0.1, 1.01):
            with self.assertRaises(DomainError):
                DiscountLedger().advance(alpha)

    def test_ledger_is_a_value(self):
        first = DiscountLedger()
        second = first.advance(0.5)
        self.assertEqual(first.t, 0)
        self.assertEqual(second.t, 1)

    def test_eta_schedule(self):
        ledgers = discounting.ledger_from_alphas([1.0] * 4, eta_scale=2.0)
        for t, led in enumerate(ledgers, start=1):
            self.assertAlmostEqual(led.eta, 2.0 / math.sqrt(t))
        self.assertAlmostEqual(ledgers[-1].s_acc, sum(2.0 / math.sqrt(t) for t in range(1, 5)))

    def test_long_heavy_discounting_does_not_overflow(self):
        last = discounting.ledger_from_alphas([0.01] * 2000)[-1]
        self.assertTrue(math.isfinite(last.log_beta))
        self.assertTrue(math.isfinite(last.ratio))
        self.assertLess(last.ratio, 1 / (1 - 0.01) + 1e-9)


def test_big_b_matches_direct_products():
    rng = np.random.default_rng(1)
    alphas = random_alphas(rng, 60, low=0.5)
    ledgers = discounting.ledger_from_alphas(alphas)
    betas = [1.0]
    for a in alphas[1:]:
        betas.append(betas[-1] / a)
    for led, b_direct in zip(ledgers, np.cumsum(betas)):
        assert abs(led.big_b - b_direct) <= 1e-9 * b_direct
        assert led.ratio >= 1.0


class TestAccumulate(unittest.TestCase):
    def test_zero_history(self):
        for alpha in (0.1, 0.5, 1.0):
            self.assertEqual(discounting.accumulate(0.0, alpha, 0.7), 0.7)

    def test_fold(self):
        total = 0.0
        for _ in range(3):
            total = discounting.accumulate(total, 1.0, 1.0)
        self.assertEqual(total, 3.0)
        total = 0.0
        for _ in range(3):
            total = discounting.accumulate(total, 0.5, 1.0)
        self.assertEqual(total, 1.75)


@pytest.mark.parametrize("seed", range(5))
def test_fold_matches_weighted_sum(seed: int):
    rng = np.random.default_rng(seed)
    alphas = random_alphas(rng, 200)
    step_losses = rng.uniform(size=200)
    folded = 0.0
    for a, lam in zip(alphas, step_losses):
        folded = discounting.accumulate(folded, a, float(lam))
    weighted = float(np.sum(discounting.relative_weights(alphas) * step_losses))
    assert abs(folded - weighted) <= 1e-9 * max(1.0, weighted)


class TestLemma1(unittest.TestCase):
    def test_single_step(self):
        self.assertEqual(discounting.lemma1_lhs_rhs([1.0]), (1.0, 2.0))

    def test_undiscounted_three(self):
        lhs, rhs = discounting.lemma1_lhs_rhs([1.0, 1.0, 1.0])
        self.assertAlmostEqual(lhs, 1 + math.sqrt(0.5) + math.sqrt(1 / 3), places=9)
        self.assertAlmostEqual(rhs, 2 * math.sqrt(3), places=9)

    def test_brute_force(self):
        betas = [1.0, 2.0, 4.0]
        big_b = [1.0, 3.0, 7.0]
        lhs_direct = sum(b * math.sqrt(b / s) for b, s in zip(betas, big_b)) / 4.0
        lhs, rhs = discounting.lemma1_lhs_rhs(betas)
        self.assertAlmostEqual(lhs, lhs_direct)
        self.assertAlmostEqual(rhs, 2 * math.sqrt(7 / 4))
        self.assertLessEqual(lhs, rhs)

    def test_rejects_bad_sequences(self):
        for seq in ([], [0.5, 1.0], [2.0, 1.0]):
            with self.assertRaises(DomainError):
                discounting.lemma1_lhs_rhs(seq)

    def test_random_schedules(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            size = int(rng.integers(1, 40))
            alphas = random_alphas(rng, size)
            betas = [1.0]
            for a in alphas[1:]:
                betas.append(betas[-1] / a)
            lhs, rhs = discounting.lemma1_lhs_rhs(betas)
            self.assertLessEqual(lhs, rhs)


class TestRates(unittest.TestCase):
    def test_rate_exponent_at_most_one(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            ledgers = discounting.ledger_from_alphas(random_alphas(rng, 50), eta_scale=1.0)
            self.assertEqual(discounting.rate_exponent(DiscountLedger(), ledgers[0]), 0.0)
            for prev, curr in zip(ledgers, ledgers[1:]):
                ratio = curr.last_alpha * curr.eta / prev.eta
                self.assertAlmostEqual(discounting.rate_exponent(prev, curr), ratio, places=12)
                self.assertLessEqual(ratio, 1.0 + 1e-12)

    def test_exponential_ratio(self):
        self.assertEqual(discounting.exponential_ratio(1.0, 7), 7.0)
        self.assertAlmostEqual(discounting.exponential_ratio(0.5, 3), 1.75)
        last = discounting.ledger_from_alphas([0.9] * 25)[-1]
        self.assertAlmostEqual(discounting.exponential_ratio(0.9, 25), last.ratio, places=12)

    def test_relative_weights(self):
        np.testing.assert_allclose(discounting.relative_weights([0.3, 0.5, 0.5]), [0.25, 0.5, 1.0])
        self.assertEqual(discounting.relative_weights([]).size, 0)
