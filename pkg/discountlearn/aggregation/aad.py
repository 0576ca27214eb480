import math
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.special import logsumexp

from discountlearn import games
from discountlearn.discounting import accumulate, check_alpha
from discountlearn.exceptions import ConsistencyError, DomainError, UnsupportedGameError
from discountlearn.games import GameSpec, GeneralizedPrediction
from discountlearn.utils.enums import GameKind

log = structlog.get_logger(__name__)

IDENTITY_TOLERANCE = 1e-9
WEIGHT_SUM_TOLERANCE = 1e-12
PRIOR_SUM_TOLERANCE = 1e-12


class AadState(BaseModel):
    """
    Aggregating Algorithm with Discounting.

    Weights live in log space: ln w_t^k = η(L_t/c − L_t^k). An expert whose
    loss became infinite keeps a log-weight of −inf and never re-enters the
    mixture.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    game: GameSpec
    c: float
    eta: float
    log_priors: np.ndarray
    log_weights: np.ndarray
    learner_loss: float = 0.0
    expert_losses: np.ndarray
    t: int = 0

    @property
    def n_experts(self) -> int:
        return int(self.log_priors.size)


def inverse_square_priors(grid: Sequence[float]) -> np.ndarray:
    """Prior weights proportional to 1/a² over a parameter grid."""
    a = np.asarray(grid, dtype=float)
    if a.size == 0 or (a <= 0).any():
        raise DomainError("grid values must be positive", grid=list(grid))
    raw = 1.0 / a**2
    return raw / raw.sum()


def aad_init(game: GameSpec, priors: Sequence[float] | None = None, n_experts: int = 0) -> AadState:
    constants = games.mixability_constants(game)
    if constants is None:
        raise UnsupportedGameError(
            "game has no mixability constants with c = 1", game=game.kind.value
        )
    c, eta = constants
    if priors is None:
        if n_experts < 1:
            raise DomainError("need priors or a positive number of experts")
        p = np.full(n_experts, 1.0 / n_experts)
    else:
        p = np.asarray(priors, dtype=float)
    if p.size == 0:
        raise DomainError("priors are empty")
    if (p <= 0).any():
        raise DomainError("priors must be strictly positive", priors=p.tolist())
    if abs(p.sum() - 1.0) > PRIOR_SUM_TOLERANCE:
        raise DomainError("priors must sum to 1", total=float(p.sum()))
    k = p.size
    return AadState(
        game=game,
        c=c,
        eta=eta,
        log_priors=np.log(p),
        log_weights=np.zeros(k),
        expert_losses=np.zeros(k),
    )


def _check_inputs(state: AadState, alpha: float, expert_preds: Sequence[float]) -> np.ndarray:
    check_alpha(alpha)
    preds = np.asarray(expert_preds, dtype=float)
    if preds.shape != (state.n_experts,):
        raise DomainError(
            "wrong number of expert predictions", expected=state.n_experts, got=preds.size
        )
    for p in preds:
        games.check_prediction(state.game, float(p))
    return preds


def _mixing_log_weights(state: AadState, alpha: float, learner_free: bool) -> np.ndarray:
    if learner_free:
        # drops the k-independent αηL_{t−1}/c term; g shifts by a constant
        return state.log_priors - alpha * state.eta * state.expert_losses
    return state.log_priors + alpha * state.log_weights


def aad_generalized(
    state: AadState,
    alpha: float,
    expert_preds: Sequence[float],
    learner_free: bool = False,
) -> GeneralizedPrediction:
    """
    g(ω) = −(c/η)·ln Σ_k prior_k·(w_{t−1}^k)^α·exp(−η λ(γ_t^k, ω)).

    With `learner_free` the learner's own loss is left out of the weights.
    That g differs from the canonical one by a constant, so any
    shift-invariant substitution gives the same prediction.
    """
    preds = _check_inputs(state, alpha, expert_preds)
    mix = _mixing_log_weights(state, alpha, learner_free)
    return games.mixture(state.game, state.c, state.eta, preds, mix)


def aad_predict(state: AadState, alpha: float, expert_preds: Sequence[float]) -> float:
    # the square substitution only looks at g(Y₂) − g(Y₁)
    learner_free = state.game.kind == GameKind.SQUARE
    g = aad_generalized(state, alpha, expert_preds, learner_free=learner_free)
    return games.substitute(state.game, g)


def _identity_gap(state: AadState) -> float:
    """
    Largest gap between ln w^k and η(L/c − L^k), absolute while |η(L/c − L^k)| ≤ 1
    and relative to it beyond. Infinite losses
    must match exactly.
    """
    expected = state.eta * (state.learner_loss / state.c - state.expert_losses)
    worst = 0.0
    for got, want in zip(state.log_weights, expected):
        if math.isinf(want) or math.isinf(got):
            if got != want:
                return math.inf
            continue
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst


def aad_update(
    state: AadState,
    alpha: float,
    expert_preds: Sequence[float],
    learner_pred: float,
    outcome: float,
) -> AadState:
    preds = _check_inputs(state, alpha, expert_preds)
    games.check_outcome(state.game, outcome)
    games.check_prediction(state.game, learner_pred)

    learner_step = float(games.losses(state.game, np.array([learner_pred]), outcome)[0])
    expert_step = games.losses(state.game, preds, outcome)
    log_weights = alpha * state.log_weights + state.eta * (learner_step / state.c - expert_step)

    with np.errstate(invalid="ignore"):
        expert_losses = alpha * state.expert_losses + expert_step
    nxt = state.model_copy(
        update={
            "log_weights": log_weights,
            "learner_loss": accumulate(state.learner_loss, alpha, learner_step),
            "expert_losses": expert_losses,
            "t": state.t + 1,
        }
    )
    _verify(nxt)
    log.debug("aad step", step=nxt.t, learner_loss=nxt.learner_loss)
    return nxt


def weight_sum_log(state: AadState) -> float:
    """ln Σ_k prior_k·w_t^k; never above zero for a correct run."""
    return float(logsumexp(state.log_priors + state.log_weights))


def weight_margin(state: AadState) -> float:
    """
    Room left under the weight-sum limit: ln Σ prior·w may exceed zero by the
    substitution tolerance scaled by η/c, plus rounding. Negative means the
    run is inconsistent.
    """
    allowed = state.eta * games.SUBSTITUTION_TOLERANCE / state.c + WEIGHT_SUM_TOLERANCE
    return allowed - weight_sum_log(state)


def _verify(state: AadState) -> None:
    gap = _identity_gap(state)
    if gap > IDENTITY_TOLERANCE:
        log.error("log-weight identity broken", step=state.t, gap=gap)
        raise ConsistencyError(
            "log-weights drifted from η(L/c − L^k)", check="identity", step=state.t, excess=gap
        )
    margin = weight_margin(state)
    if margin < 0:
        log.error("weight sum above one", step=state.t, margin=margin)
        raise ConsistencyError(
            "prior-weighted sum of weights exceeds 1",
            check="weights",
            step=state.t,
            excess=-margin,
        )


def aad_bound(state: AadState, expert_index: int) -> float:
    """c·L_t^k + (c/η)·ln(1/prior_k)."""
    return float(aad_bounds(state)[expert_index])


def aad_bounds(state: AadState) -> np.ndarray:
    return state.c * state.expert_losses - (state.c / state.eta) * state.log_priors
