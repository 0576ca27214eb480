import math
import unittest

import numpy as np
import pytest
from scipy.special import logsumexp

from discountlearn import games
from discountlearn.aggregation import aad
from discountlearn.aggregation.engine import AlgorithmSettings
from discountlearn.aggregation.engines import AadEngine
from discountlearn.exceptions import ConsistencyError, DomainError, UnsupportedGameError
from discountlearn.games import GameSpec
from discountlearn.harness.scenario import Tolerances
from discountlearn.utils.enums import Theorem


def play(
    state: aad.AadState, alpha: float, preds: list[float], outcome: float
) -> tuple[aad.AadState, float]:
    gamma = aad.aad_predict(state, alpha, preds)
    return aad.aad_update(state, alpha, preds, gamma, outcome), gamma


def adversarial_outcome(game: GameSpec, gamma: float) -> float:
    lo = games.loss(game, gamma, game.y_lo)
    hi = games.loss(game, gamma, game.y_hi)
    return game.y_hi if hi >= lo else game.y_lo


class TestInit(unittest.TestCase):
    def test_uniform(self):
        state = aad.aad_init(GameSpec.square(), n_experts=3)
        np.testing.assert_allclose(state.log_priors, np.log([1 / 3] * 3))
        np.testing.assert_array_equal(state.log_weights, np.zeros(3))
        self.assertEqual(state.learner_loss, 0.0)

    def test_inverse_square_priors(self):
        priors = aad.inverse_square_priors([1, 2, 3, 4])
        norm = 1 + 1 / 4 + 1 / 9 + 1 / 16
        expected = [1 / (a * a * norm) for a in (1, 2, 3, 4)]
        np.testing.assert_allclose(priors, expected)
        state = aad.aad_init(GameSpec.square(), priors=priors)
        self.assertEqual(state.n_experts, 4)

    def test_zero_prior(self):
        with self.assertRaises(DomainError):
            aad.aad_init(GameSpec.square(), priors=[0.0, 1.0])

    def test_priors_must_sum_to_one(self):
        with self.assertRaises(DomainError):
            aad.aad_init(GameSpec.square(), priors=[0.5, 0.6])

    def test_absolute_is_unsupported(self):
        with self.assertRaises(UnsupportedGameError):
            aad.aad_init(GameSpec.absolute(), n_experts=2)


class TestGeneralized(unittest.TestCase):
    def test_single_expert_is_its_loss(self):
        game = GameSpec.square()
        state = aad.aad_init(game, n_experts=1)
        g = aad.aad_generalized(state, 0.7, [0.3])
        self.assertAlmostEqual(g.at(0.0), 0.09)
        self.assertAlmostEqual(g.at(1.0), 0.49)
        self.assertAlmostEqual(aad.aad_predict(state, 0.7, [0.3]), 0.3)

    def test_symmetric_pair(self):
        state = aad.aad_init(GameSpec.square(), n_experts=2)
        g = aad.aad_generalized(state, 1.0, [0.0, 1.0])
        expected = -0.5 * math.log(0.5 * (1 + math.exp(-2)))
        self.assertAlmostEqual(g.at(0.0), expected)
        self.assertAlmostEqual(g.at(1.0), expected)
        self.assertAlmostEqual(aad.aad_predict(state, 1.0, [0.0, 1.0]), 0.5)

    def test_common_prediction(self):
        game = GameSpec.square()
        state = aad.aad_init(game, n_experts=3)
        rng = np.random.default_rng(5)
        for _ in range(20):
            preds = list(rng.uniform(size=3))
            state, _ = play(state, 0.8, preds, float(rng.uniform()))
        alpha = 0.6
        g = aad.aad_generalized(state, alpha, [0.4] * 3)
        gamma = games.substitute(game, g)
        shift = -(1 / 2) * float(logsumexp(state.log_priors + alpha * state.log_weights))
        for omega in (0.0, 1.0):
            self.assertLessEqual(games.loss(game, gamma, omega), (0.4 - omega) ** 2 + shift + 1e-9)

    def test_learner_free_only_shifts(self):
        state = aad.aad_init(GameSpec.square(), n_experts=2)
        state, _ = play(state, 1.0, [0.2, 0.9], 1.0)
        full = aad.aad_generalized(state, 0.9, [0.1, 0.8])
        fast = aad.aad_generalized(state, 0.9, [0.1, 0.8], learner_free=True)
        diffs = np.subtract(full.values, fast.values)
        self.assertAlmostEqual(diffs[0], diffs[1], places=12)

    def test_wrong_number_of_predictions(self):
        state = aad.aad_init(GameSpec.square(), n_experts=2)
        with self.assertRaises(DomainError):
            aad.aad_generalized(state, 1.0, [0.5])


class TestUpdate(unittest.TestCase):
    def test_single_expert_keeps_zero_weight(self):
        state = aad.aad_init(GameSpec.square(), n_experts=1)
        rng = np.random.default_rng(0)
        for _ in range(50):
            state, _ = play(state, float(rng.uniform(0.3, 1)), [float(rng.uniform())], 1.0)
            self.assertAlmostEqual(float(state.log_weights[0]), 0.0, places=12)
        self.assertAlmostEqual(aad.aad_bound(state, 0), state.learner_loss, places=9)

    def test_symmetric_update(self):
        state = aad.aad_init(GameSpec.square(), n_experts=2)
        state, gamma = play(state, 1.0, [0.0, 1.0], 0.0)
        self.assertAlmostEqual(gamma, 0.5)
        np.testing.assert_allclose(state.log_weights, [0.5, -1.5])
        self.assertLessEqual(aad.weight_sum_log(state), 0.0)

    def test_undiscounted_identity(self):
        state = aad.aad_init(GameSpec.square(), n_experts=4)
        rng = np.random.default_rng(1)
        for _ in range(100):
            state, _ = play(state, 1.0, list(rng.uniform(size=4)), float(rng.uniform()))
            expected = 2.0 * (state.learner_loss - state.expert_losses)
            np.testing.assert_allclose(state.log_weights, expected, atol=1e-9)

    def test_corrupted_weights_are_caught(self):
        state = aad.aad_init(GameSpec.square(), n_experts=2)
        state, _ = play(state, 1.0, [0.2, 0.7], 1.0)
        broken = state.model_copy(update={"log_weights": state.log_weights + 0.1})
        with self.assertRaises(ConsistencyError) as ctx:
            play(broken, 1.0, [0.2, 0.7], 0.0)
        self.assertEqual(ctx.exception.check, "identity")
        self.assertEqual(ctx.exception.step, 2)

    def test_log_loss_expert_drops_out(self):
        game = GameSpec.logloss()
        state = aad.aad_init(game, n_experts=2)
        state, _ = play(state, 0.9, [0.0, 0.6], 1.0)
        self.assertEqual(state.log_weights[0], -math.inf)
        state, gamma = play(state, 0.5, [0.0, 0.7], 1.0)
        self.assertAlmostEqual(gamma, 0.7, places=6)
        self.assertEqual(state.log_weights[0], -math.inf)


class TestBound(unittest.TestCase):
    def test_uniform_additive_term(self):
        state = aad.aad_init(GameSpec.square(), n_experts=5)
        np.testing.assert_allclose(aad.aad_bounds(state), [math.log(5) / 2] * 5)

    def test_prior_difference(self):
        state = aad.aad_init(GameSpec.square(), priors=[0.5, 0.25, 0.25])
        diff = aad.aad_bound(state, 1) - aad.aad_bound(state, 0)
        self.assertAlmostEqual(diff, math.log(2) / 2)


class TestWeightMargin(unittest.TestCase):
    def test_log_game_overshoot_within_substitution_tolerance(self):
        state = aad.aad_init(GameSpec.logloss(), n_experts=2)
        state = state.model_copy(update={"log_weights": np.full(2, 5e-10)})
        self.assertGreater(aad.weight_sum_log(state), 1e-12)
        self.assertGreater(aad.weight_margin(state), 0.0)

    def test_overshoot_past_tolerance(self):
        state = aad.aad_init(GameSpec.logloss(), n_experts=2)
        state = state.model_copy(update={"log_weights": np.full(2, 2e-9)})
        self.assertLess(aad.weight_margin(state), 0.0)

    def test_engine_reports_the_same_margin(self):
        engine = AadEngine(GameSpec.logloss(), AlgorithmSettings(), n_experts=2)
        engine.state = engine.state.model_copy(update={"log_weights": np.full(2, 5e-10)})
        slack = engine.report().slacks[Theorem.WEIGHTS]
        self.assertEqual(slack, aad.weight_margin(engine.state))
        self.assertGreaterEqual(slack, -Tolerances().weights)


def classic_aa_prediction(losses: np.ndarray, preds: np.ndarray) -> float:
    # normalized weights e^{−ηL^k}, square substitution on [0, 1]
    w = np.exp(-2.0 * (losses - losses.min()))
    w /= w.sum()
    g0 = -0.5 * math.log(float(w @ np.exp(-2.0 * preds**2)))
    g1 = -0.5 * math.log(float(w @ np.exp(-2.0 * (1 - preds) ** 2)))
    return 0.5 - (g1 - g0) / 2


def test_undiscounted_matches_classic_aggregating_algorithm():
    game = GameSpec.square()
    state = aad.aad_init(game, n_experts=5)
    rng = np.random.default_rng(9)
    cumulative = np.zeros(5)
    for _ in range(200):
        preds = rng.uniform(size=5)
        gamma = aad.aad_predict(state, 1.0, list(preds))
        assert abs(gamma - classic_aa_prediction(cumulative, preds)) <= 1e-10
        omega = float(rng.uniform())
        state = aad.aad_update(state, 1.0, list(preds), gamma, omega)
        cumulative += (preds - omega) ** 2


@pytest.mark.parametrize("seed", range(20))
def test_discounted_bound_holds(seed: int):
    game = GameSpec.square()
    rng = np.random.default_rng(seed)
    k = 10
    state = aad.aad_init(game, n_experts=k)
    for _ in range(1000):
        alpha = float(rng.uniform(0.5, 1.0))
        preds = list(rng.uniform(size=k))
        gamma = aad.aad_predict(state, alpha, preds)
        state = aad.aad_update(state, alpha, preds, gamma, adversarial_outcome(game, gamma))
        assert (state.learner_loss <= aad.aad_bounds(state) + 1e-9).all()
        assert aad.weight_sum_log(state) <= 1e-12
