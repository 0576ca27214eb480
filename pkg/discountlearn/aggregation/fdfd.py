import math
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.optimize import bisect
from scipy.special import logsumexp, polygamma

from discountlearn import games
from discountlearn.discounting import DiscountLedger, accumulate, check_alpha, rate_exponent
from discountlearn.exceptions import (
    ConsistencyError,
    DomainError,
    ExistenceViolationError,
    UnsupportedGameError,
)
from discountlearn.games import GameSpec

log = structlog.get_logger(__name__)

# 1/c = Σ_{j≥1} 1/j²
ZETA_NORM = 6.0 / math.pi**2
DEFAULT_J_MAX = 50
# a j-column is negligible once it falls this far below the partial sum
TRUNCATION_RATIO = 1e-14
SEARCH_TOLERANCE = 1e-10
FEASIBILITY_TOLERANCE = 1e-9


class FdfdState(BaseModel):
    """
    Threshold forecaster for binary bounded convex games. Losses are divided
    by `scale` so that they fall in [0, 1]. The ledger carries η_t = √(β_t/B_t)
    and s_t = (1/β_t)·Σ_{τ≤t} β_τη_τ.

    `last_log_f` is ln f_t(γ_t, ω_t) of the step just played; the next step
    checks that raising it to α_tη_{t+1}/η_t still dominates C_{t+1}.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    game: GameSpec
    scale: float
    j_max: int = DEFAULT_J_MAX
    ledger: DiscountLedger
    learner_loss: float = 0.0
    expert_losses: np.ndarray
    last_log_f: float = 0.0
    last_log_threshold: float = 0.0

    @property
    def n_experts(self) -> int:
        return int(self.expert_losses.size)


class _Series(BaseModel):
    """The j-series of one step, cut at `depth` terms."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ledger: DiscountLedger
    base: np.ndarray  # ln of the C_t terms, K × depth
    log_threshold: float

    @property
    def depth(self) -> int:
        return int(self.base.shape[1])


def fdfd_init(game: GameSpec, n_experts: int, j_max: int = DEFAULT_J_MAX) -> FdfdState:
    if not game.binary:
        raise UnsupportedGameError("threshold forecaster needs a binary game", game=game.kind.value)
    scale = games.loss_bound(game)
    if scale is None:
        raise UnsupportedGameError("game has unbounded losses", game=game.kind.value)
    if n_experts < 1:
        raise DomainError("need at least one expert", n_experts=n_experts)
    if j_max < 1:
        raise DomainError("series depth must be positive", j_max=j_max)
    return FdfdState(
        game=game,
        scale=scale,
        j_max=j_max,
        ledger=DiscountLedger(eta_scale=1.0),
        expert_losses=np.zeros(n_experts),
    )


def _truncation_depth(columns: np.ndarray) -> int:
    """
    Number of j-columns to keep: stop at the first column that is past the
    peak and negligible against what has been summed so far.
    """
    cutoff = math.log(TRUNCATION_RATIO)
    partial = columns[0]
    for j in range(1, columns.size):
        if columns[j] < columns[j - 1] and columns[j] < partial + cutoff:
            return j
        partial = float(np.logaddexp(partial, columns[j]))
    return int(columns.size)


def _series(state: FdfdState, alpha: float) -> _Series:
    check_alpha(alpha)
    ledger = state.ledger.advance(alpha)
    eta = ledger.eta
    j = np.arange(1, state.j_max + 1, dtype=float)
    first = state.ledger.t == 0
    regret = 0.0 if first else state.learner_loss - state.expert_losses
    s_prev = 0.0 if first else state.ledger.s_acc
    base = (
        math.log(ZETA_NORM)
        - 2 * np.log(j)[None, :]
        - math.log(state.n_experts)
        + np.outer(alpha * eta * np.broadcast_to(regret, state.n_experts), j)
        - (j**2 * eta * alpha * s_prev / 2)[None, :]
    )
    depth = _truncation_depth(logsumexp(base, axis=0))
    if depth == state.j_max and state.j_max > 1 and not first:
        log.warning("series did not settle within j_max", step=ledger.t, j_max=state.j_max)
    base = base[:, :depth]
    log_threshold = float(logsumexp(base))
    if first:
        # C₁ sums c/j² over every j; add the exact tail past the cut
        tail = ZETA_NORM * float(polygamma(1, depth + 1))
        log_threshold = float(np.logaddexp(log_threshold, math.log(tail)))
    return _Series(ledger=ledger, base=base, log_threshold=log_threshold)


def _log_f(
    state: FdfdState, series: _Series, preds: np.ndarray, gamma: float, outcome: float
) -> float:
    eta = series.ledger.eta
    j = np.arange(1, series.depth + 1, dtype=float)
    lam = float(games.losses(state.game, np.array([gamma]), outcome)[0]) / state.scale
    lam_k = games.losses(state.game, preds, outcome) / state.scale
    step = np.outer(eta * (lam - lam_k), j) - (j**2 * eta**2 / 2)[None, :]
    return float(logsumexp(series.base + step))


def _check_preds(state: FdfdState, expert_preds: Sequence[float]) -> np.ndarray:
    preds = np.asarray(expert_preds, dtype=float)
    if preds.shape != (state.n_experts,):
        raise DomainError(
            "wrong number of expert predictions", expected=state.n_experts, got=preds.size
        )
    for p in preds:
        games.check_prediction(state.game, float(p))
    return preds


def fdfd_f(
    state: FdfdState, alpha: float, expert_preds: Sequence[float], gamma: float, outcome: float
) -> float:
    games.check_outcome(state.game, outcome)
    preds = _check_preds(state, expert_preds)
    return math.exp(_log_f(state, _series(state, alpha), preds, gamma, outcome))


def fdfd_threshold(state: FdfdState, alpha: float) -> float:
    return math.exp(_series(state, alpha).log_threshold)


def _search(state: FdfdState, series: _Series, preds: np.ndarray) -> float:
    """
    Minimizes max_ω f_t(γ, ω) over the prediction interval. f(·, y_hi) falls
    and f(·, y_lo) rises in γ, so the minimum is an endpoint or the crossing
    point of the two.
    """
    lo, hi = state.game.y_lo, state.game.y_hi

    def d(gamma: float) -> float:
        return _log_f(state, series, preds, gamma, hi) - _log_f(state, series, preds, gamma, lo)

    if d(lo) <= 0:
        return lo
    if d(hi) >= 0:
        return hi
    return float(bisect(d, lo, hi, xtol=SEARCH_TOLERANCE))


def fdfd_predict(state: FdfdState, alpha: float, expert_preds: Sequence[float]) -> float:
    preds = _check_preds(state, expert_preds)
    series = _series(state, alpha)
    gamma = _search(state, series, preds)
    worst = max(
        _log_f(state, series, preds, gamma, omega) for omega in (state.game.y_lo, state.game.y_hi)
    )
    excess = math.exp(worst) - math.exp(series.log_threshold)
    if excess > FEASIBILITY_TOLERANCE:
        log.error("no feasible prediction", step=series.ledger.t, gamma=gamma, excess=excess)
        raise ExistenceViolationError(
            "no prediction keeps f_t below C_t",
            check="threshold",
            step=series.ledger.t,
            excess=excess,
        )
    return gamma


def fdfd_update(
    state: FdfdState,
    alpha: float,
    expert_preds: Sequence[float],
    learner_pred: float,
    outcome: float,
) -> FdfdState:
    preds = _check_preds(state, expert_preds)
    games.check_outcome(state.game, outcome)
    games.check_prediction(state.game, learner_pred)

    series = _series(state, alpha)
    ledger = series.ledger
    threshold = math.exp(series.log_threshold)
    if threshold > 1 + FEASIBILITY_TOLERANCE:
        log.error("threshold above one", step=ledger.t, threshold=threshold)
        raise ConsistencyError(
            "C_t exceeds 1", check="threshold", step=ledger.t, excess=threshold - 1
        )
    if state.ledger.t > 0:
        carried = math.exp(rate_exponent(state.ledger, ledger) * state.last_log_f)
        if carried < threshold - FEASIBILITY_TOLERANCE:
            raise ConsistencyError(
                "threshold grew past the carried value of f",
                check="threshold",
                step=ledger.t,
                excess=threshold - carried,
            )

    log_f = _log_f(state, series, preds, learner_pred, outcome)
    if math.exp(log_f) > threshold + FEASIBILITY_TOLERANCE:
        log.error("played prediction above threshold", step=ledger.t, log_f=log_f)
        raise ConsistencyError(
            "f_t(γ_t, ω_t) exceeds C_t",
            check="threshold",
            step=ledger.t,
            excess=math.exp(log_f) - threshold,
        )

    lam = float(games.losses(state.game, np.array([learner_pred]), outcome)[0]) / state.scale
    lam_k = games.losses(state.game, preds, outcome) / state.scale
    nxt = state.model_copy(
        update={
            "ledger": ledger,
            "learner_loss": accumulate(state.learner_loss, alpha, lam),
            "expert_losses": alpha * state.expert_losses + lam_k,
            "last_log_f": log_f,
            "last_log_threshold": series.log_threshold,
        }
    )
    log.debug("fdfd step", step=ledger.t, threshold=threshold, log_f=log_f)
    return nxt


def quantile_loss(expert_losses: Sequence[float], epsilon: float) -> float:
    """Smallest loss L such that at least εK experts have loss ≤ L."""
    if not 0.0 < epsilon <= 1.0:
        raise DomainError("epsilon must lie in (0, 1]", epsilon=epsilon)
    ordered = np.sort(np.asarray(expert_losses, dtype=float))
    rank = max(1, math.ceil(epsilon * ordered.size - 1e-12))
    return float(ordered[rank - 1])


def fdfd_quantile_bound(ledger: DiscountLedger, epsilon: float) -> float:
    """2·√((B_T/β_T)·ln(1/ε)) + 7·√(B_T/β_T), in scaled units."""
    if not 0.0 < epsilon <= 1.0:
        raise DomainError("epsilon must lie in (0, 1]", epsilon=epsilon)
    return 2 * math.sqrt(ledger.ratio * math.log(1 / epsilon)) + 7 * math.sqrt(ledger.ratio)
