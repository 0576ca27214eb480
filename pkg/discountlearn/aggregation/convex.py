import math
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.special import logsumexp, softmax

from discountlearn import games
from discountlearn.discounting import DiscountLedger, accumulate, check_alpha, rate_exponent
from discountlearn.exceptions import ConsistencyError, DomainError, UnsupportedGameError
from discountlearn.games import GameSpec

log = structlog.get_logger(__name__)

IDENTITY_TOLERANCE = 1e-9
WEIGHT_SUM_TOLERANCE = 1e-12
MIXTURE_TOLERANCE = 1e-9


class ConvexAggState(BaseModel):
    """
    Learner for bounded convex games with the time-varying rate
    η_t = a·√(β_t/B_t). Losses are divided by `scale` so that they fall in
    [0, 1]; every loss stored here is in those scaled units.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    game: GameSpec
    scale: float
    a_param: float
    ledger: DiscountLedger
    log_weights: np.ndarray
    learner_loss: float = 0.0
    expert_losses: np.ndarray

    @property
    def n_experts(self) -> int:
        return int(self.log_weights.size)


def default_a(n_experts: int) -> float:
    return 2.0 * math.sqrt(math.log(n_experts))


def conv_init(game: GameSpec, n_experts: int, a_param: float | None = None) -> ConvexAggState:
    scale = games.loss_bound(game)
    if scale is None:
        raise UnsupportedGameError("game has unbounded losses", game=game.kind.value)
    if not game.convex_flag:
        raise UnsupportedGameError("game is not convex", game=game.kind.value)
    if n_experts < 1:
        raise DomainError("need at least one expert", n_experts=n_experts)
    a = default_a(n_experts) if a_param is None else a_param
    if a < 0 or (a == 0 and n_experts > 1):
        raise DomainError("learning rate scale must be positive", a_param=a)
    return ConvexAggState(
        game=game,
        scale=scale,
        a_param=a,
        ledger=DiscountLedger(eta_scale=a),
        log_weights=np.zeros(n_experts),
        expert_losses=np.zeros(n_experts),
    )


def conv_learning_rate(ledger: DiscountLedger, a_param: float) -> float:
    """η_t = a·√(β_t/B_t) for a ledger already advanced to step t."""
    if ledger.t == 0:
        raise DomainError("ledger has not been advanced")
    return a_param / math.sqrt(ledger.ratio)


def _check_preds(state: ConvexAggState, expert_preds: Sequence[float]) -> np.ndarray:
    preds = np.asarray(expert_preds, dtype=float)
    if preds.shape != (state.n_experts,):
        raise DomainError(
            "wrong number of expert predictions", expected=state.n_experts, got=preds.size
        )
    for p in preds:
        games.check_prediction(state.game, float(p))
    return preds


def mixing_weights(state: ConvexAggState, alpha: float) -> np.ndarray:
    """Normalized (w_{t−1}^k)^{α_{t−1}η_t/η_{t−1}}."""
    check_alpha(alpha)
    exponent = rate_exponent(state.ledger, state.ledger.advance(alpha))
    return softmax(exponent * state.log_weights)


def waad_weights(state: ConvexAggState, alpha: float) -> np.ndarray:
    """Explicit form of the same weights: q_k ∝ exp(−α_{t−1}·η_t·L_{t−1}^k)."""
    check_alpha(alpha)
    eta = state.ledger.advance(alpha).eta
    return softmax(-alpha * eta * state.expert_losses)


def conv_predict(state: ConvexAggState, alpha: float, expert_preds: Sequence[float]) -> float:
    preds = _check_preds(state, expert_preds)
    q = mixing_weights(state, alpha)
    gamma = float(np.clip(q @ preds, state.game.y_lo, state.game.y_hi))
    # λ(γ,ω) ≤ Σ q_k λ(γ^k,ω) by convexity; checked on the sample outcomes
    for omega in games.outcome_points(state.game):
        mixed = float(q @ games.losses(state.game, preds, omega))
        lam = float(games.losses(state.game, np.array([gamma]), omega)[0])
        if lam > mixed + MIXTURE_TOLERANCE:
            log.error("weighted average above mixed loss", outcome=omega, gap=lam - mixed)
            raise ConsistencyError(
                "weighted-average prediction loses more than the mixture",
                check="mixture",
                step=state.ledger.t + 1,
                excess=lam - mixed,
            )
    return gamma


def conv_update(
    state: ConvexAggState,
    alpha: float,
    expert_preds: Sequence[float],
    learner_pred: float,
    outcome: float,
) -> ConvexAggState:
    preds = _check_preds(state, expert_preds)
    games.check_outcome(state.game, outcome)
    games.check_prediction(state.game, learner_pred)

    ledger = state.ledger.advance(alpha)
    exponent = rate_exponent(state.ledger, ledger)
    eta = ledger.eta
    lam = float(games.losses(state.game, np.array([learner_pred]), outcome)[0]) / state.scale
    lam_k = games.losses(state.game, preds, outcome) / state.scale

    log_weights = exponent * state.log_weights + eta * (lam - lam_k) - eta**2 / 8
    nxt = state.model_copy(
        update={
            "ledger": ledger,
            "log_weights": log_weights,
            "learner_loss": accumulate(state.learner_loss, alpha, lam),
            "expert_losses": alpha * state.expert_losses + lam_k,
        }
    )
    _verify(nxt)
    log.debug("convex step", step=ledger.t, eta=eta, learner_loss=nxt.learner_loss)
    return nxt


def expected_log_weights(state: ConvexAggState) -> np.ndarray:
    """η_t(L_t − L_t^k) − (η_t/8)·s_t, from the losses alone."""
    eta = state.ledger.eta
    return eta * (state.learner_loss - state.expert_losses) - eta * state.ledger.s_acc / 8


def weight_sum_log(state: ConvexAggState) -> float:
    """ln Σ_k (1/K)·w_t^k."""
    return float(logsumexp(state.log_weights) - math.log(state.n_experts))


def _verify(state: ConvexAggState) -> None:
    """
    Checks the log-weights against their closed form with the same gap as AAD:
    absolute up to magnitude 1, relative beyond. Then the average weight.
    """
    expected = expected_log_weights(state)
    gap = float(np.max(np.abs(state.log_weights - expected) / np.maximum(1.0, np.abs(expected))))
    if gap > IDENTITY_TOLERANCE:
        log.error("log-weight identity broken", step=state.ledger.t, gap=gap)
        raise ConsistencyError(
            "log-weights drifted from their closed form",
            check="identity",
            step=state.ledger.t,
            excess=gap,
        )
    total = weight_sum_log(state)
    if total > WEIGHT_SUM_TOLERANCE:
        log.error("weight sum above one", step=state.ledger.t, log_sum=total)
        raise ConsistencyError(
            "average weight exceeds 1", check="weights", step=state.ledger.t, excess=total
        )


def conv_bound(ledger: DiscountLedger, k_experts: int, a_param: float | None = None) -> float:
    """
    Regret bound in scaled units: √(ln K)·√(B_T/β_T) for the default
    a = 2√(ln K), and (ln K/a + a/4)·√(B_T/β_T) otherwise.
    """
    if k_experts <= 1:
        return 0.0
    root = math.sqrt(ledger.ratio)
    log_k = math.log(k_experts)
    if a_param is None:
        return math.sqrt(log_k) * root
    return (log_k / a_param + a_param / 4) * root


def conv_prebound(ledger: DiscountLedger, k_experts: int, a_param: float) -> float:
    """
    ln K/η_T + s_T/8, the bound before the √-sum is estimated. `ledger`
    must carry the learning rate with scale `a_param`.
    """
    if ledger.eta_scale != a_param:
        raise DomainError(
            "ledger tracks a different learning rate", ledger_scale=ledger.eta_scale, a=a_param
        )
    if k_experts <= 1:
        return ledger.s_acc / 8
    return math.log(k_experts) / ledger.eta + ledger.s_acc / 8
