import math
from typing import Any, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from discountlearn.exceptions import DomainError, InfeasibleSubstitutionError
from discountlearn.utils.enums import GameKind

log = structlog.get_logger(__name__)

# slack allowed when checking λ(γ,ω) ≤ g(ω)
SUBSTITUTION_TOLERANCE = 1e-9
# bracket tolerance of the generic substitution search
SEARCH_TOLERANCE = 1e-10
# predictions may sit this far outside [y_lo, y_hi] and still be accepted
PREDICTION_SLACK = 1e-9


class GameSpec(BaseModel):
    """
    A game of prediction: outcome interval [y_lo, y_hi] (or the pair
    {y_lo, y_hi} when `binary`), prediction set [y_lo, y_hi] and a loss rule.
    The mixability constants c and eta are filled in for the games that have
    them and left empty for the absolute loss.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: GameKind
    y_lo: float = 0.0
    y_hi: float = 1.0
    binary: bool = False
    interior_points: int = 0
    c: float | None = None
    eta: float | None = None
    convex_flag: bool = True

    @model_validator(mode="before")
    @classmethod
    def fill_constants(cls, values: Any) -> Any:
        if not isinstance(values, dict):
            return values
        values = dict(values)
        kind = GameKind(values.get("kind"))
        if kind == GameKind.LOG:
            # log loss is only defined on binary outcomes
            values.setdefault("binary", True)
        y_lo = float(values.get("y_lo", 0.0))
        y_hi = float(values.get("y_hi", 1.0))
        if kind == GameKind.SQUARE and y_hi > y_lo:
            values.setdefault("c", 1.0)
            values.setdefault("eta", 2.0 / (y_hi - y_lo) ** 2)
        elif kind == GameKind.LOG:
            values.setdefault("c", 1.0)
            values.setdefault("eta", 1.0)
        return values

    @model_validator(mode="after")
    def check_domain(self) -> "GameSpec":
        if not self.y_lo < self.y_hi:
            raise ValueError(f"y_lo must be below y_hi, got [{self.y_lo}, {self.y_hi}]")
        if self.kind == GameKind.LOG:
            if (self.y_lo, self.y_hi) != (0.0, 1.0):
                raise ValueError("log loss game is defined on {0, 1} only")
            if not self.binary:
                raise ValueError("log loss game must be binary")
        if self.kind == GameKind.SQUARE and self.c != 1.0:
            raise ValueError("square loss game is mixable with c = 1 only")
        if self.kind == GameKind.ABSOLUTE and (self.c is not None or self.eta is not None):
            raise ValueError("absolute loss game has no mixability constants with c = 1")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.c is not None and self.c < 1:
            raise ValueError("c must be at least 1")
        if self.interior_points < 0:
            raise ValueError("interior_points must be non-negative")
        if self.binary and self.interior_points:
            raise ValueError("binary games have no interior outcomes")
        return self

    @property
    def width(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def midpoint(self) -> float:
        return (self.y_hi + self.y_lo) / 2

    @staticmethod
    def square(y_lo: float = 0.0, y_hi: float = 1.0, binary: bool = False) -> "GameSpec":
        return GameSpec(kind=GameKind.SQUARE, y_lo=y_lo, y_hi=y_hi, binary=binary)

    @staticmethod
    def absolute(y_lo: float = 0.0, y_hi: float = 1.0, binary: bool = False) -> "GameSpec":
        return GameSpec(kind=GameKind.ABSOLUTE, y_lo=y_lo, y_hi=y_hi, binary=binary)

    @staticmethod
    def logloss() -> "GameSpec":
        return GameSpec(kind=GameKind.LOG)


class GeneralizedPrediction(BaseModel):
    """
    A generalized prediction g: a loss value for each sampled outcome.
    Values may be +inf.
    """

    model_config = ConfigDict(frozen=True)

    points: tuple[float, ...]
    values: tuple[float, ...]

    @model_validator(mode="after")
    def check_lengths(self) -> "GeneralizedPrediction":
        if len(self.points) != len(self.values):
            raise ValueError("points and values differ in length")
        if len(self.points) < 2:
            raise ValueError("a generalized prediction needs at least both endpoints")
        return self

    def at(self, outcome: float) -> float:
        for p, v in zip(self.points, self.values):
            if p == outcome:
                return v
        raise DomainError("outcome is not a sample point of g", outcome=outcome)


def outcome_points(game: GameSpec) -> list[float]:
    """
    The outcomes every generalized prediction is evaluated at: both endpoints,
    plus `interior_points` evenly spaced interior outcomes for interval games.
    """
    if game.binary or game.interior_points == 0:
        return [game.y_lo, game.y_hi]
    inner = np.linspace(game.y_lo, game.y_hi, game.interior_points + 2)[1:-1]
    return [game.y_lo, *[float(x) for x in inner], game.y_hi]


def check_outcome(game: GameSpec, outcome: float) -> None:
    if game.binary:
        if outcome not in (game.y_lo, game.y_hi):
            raise DomainError(
                "outcome is not in the binary outcome set",
                outcome=outcome,
                outcomes=(game.y_lo, game.y_hi),
            )
        return
    if not game.y_lo <= outcome <= game.y_hi:
        raise DomainError(
            "outcome is outside the outcome interval",
            outcome=outcome,
            interval=(game.y_lo, game.y_hi),
        )


def check_prediction(game: GameSpec, prediction: float) -> None:
    if not game.y_lo - PREDICTION_SLACK <= prediction <= game.y_hi + PREDICTION_SLACK:
        raise DomainError(
            "prediction is outside the prediction set",
            prediction=prediction,
            interval=(game.y_lo, game.y_hi),
        )


def losses(game: GameSpec, predictions: np.ndarray, outcome: float) -> np.ndarray:
    """
    Vectorized loss of many predictions against one outcome. No domain
    checks; callers validate once per step.
    """
    gamma = np.clip(np.asarray(predictions, dtype=float), game.y_lo, game.y_hi)
    if game.kind == GameKind.SQUARE:
        return (gamma - outcome) ** 2
    if game.kind == GameKind.ABSOLUTE:
        return np.abs(gamma - outcome)
    with np.errstate(divide="ignore"):
        if outcome == game.y_hi:
            return -np.log(gamma)
        return -np.log1p(-gamma)


def loss(game: GameSpec, prediction: float, outcome: float) -> float:
    check_outcome(game, outcome)
    check_prediction(game, prediction)
    return float(losses(game, np.array([prediction]), outcome)[0])


def loss_bound(game: GameSpec) -> float | None:
    """Largest possible loss, or None when the loss is unbounded."""
    if game.kind == GameKind.SQUARE:
        return game.width**2
    if game.kind == GameKind.ABSOLUTE:
        return game.width
    return None


def mixability_constants(game: GameSpec) -> tuple[float, float] | None:
    if game.kind == GameKind.SQUARE:
        return 1.0, 2.0 / game.width**2
    if game.kind == GameKind.LOG:
        return 1.0, 1.0
    return None


def mixture(
    game: GameSpec,
    c: float,
    eta: float,
    predictions: Sequence[float] | np.ndarray,
    log_weights: np.ndarray,
    points: Sequence[float] | None = None,
) -> GeneralizedPrediction:
    """
    g(ω) = −(c/η) ln Σ_k exp(log_weights_k − η λ(γ_k, ω)).
    The log-weights need not be normalized.
    """
    points = list(points) if points is not None else outcome_points(game)
    preds = np.asarray(predictions, dtype=float)
    values = []
    for omega in points:
        exponent = log_weights - eta * losses(game, preds, omega)
        values.append(float(-(c / eta) * logsumexp(exponent)))
    return GeneralizedPrediction(points=tuple(points), values=tuple(values))


def violation(game: GameSpec, gamma: float, g: GeneralizedPrediction) -> float:
    """max_ω λ(γ,ω) − g(ω) over the sample points of g; +inf g never binds."""
    worst = -math.inf
    for omega, value in zip(g.points, g.values):
        if value == math.inf:
            continue
        lam = float(losses(game, np.array([gamma]), omega)[0])
        worst = max(worst, lam - value)
    return worst


def _square_substitution(game: GameSpec, g: GeneralizedPrediction) -> float:
    g_lo, g_hi = g.at(game.y_lo), g.at(game.y_hi)
    return game.midpoint - (g_hi - g_lo) / (2 * game.width)


def _endpoint_crossing(game: GameSpec, g: GeneralizedPrediction) -> float | None:
    """
    The γ where the gaps at both endpoints are equal. λ(·,y_hi) decreases
    and λ(·,y_lo) increases, so the difference has at most one root.
    """
    g_lo, g_hi = g.at(game.y_lo), g.at(game.y_hi)
    if not (math.isfinite(g_lo) and math.isfinite(g_hi)):
        return None

    def d(gamma: float) -> float:
        gap_hi = losses(game, np.array([gamma]), game.y_hi)[0] - g_hi
        gap_lo = losses(game, np.array([gamma]), game.y_lo)[0] - g_lo
        return float(gap_hi - gap_lo)

    inset = 1e-12 * game.width
    a, b = game.y_lo + inset, game.y_hi - inset
    if d(a) * d(b) > 0:
        return None
    return float(brentq(d, a, b, xtol=1e-15))


def _argmin_substitution(game: GameSpec, g: GeneralizedPrediction) -> float:
    """
    Minimizes max_ω(λ(γ,ω) − g(ω)) over [y_lo, y_hi]. The objective is convex
    for all supported games, so a bounded scalar search finds the minimum.
    The search stops at a relative accuracy near 1e-8, too coarse where the
    optimum is a kink between the endpoint gaps, so that crossing is solved
    for directly and both endpoints are compared as well.
    """
    result = minimize_scalar(
        lambda gamma: violation(game, gamma, g),
        bounds=(game.y_lo, game.y_hi),
        method="bounded",
        options={"xatol": SEARCH_TOLERANCE},
    )
    candidates = [float(result.x), game.y_lo, game.y_hi]
    crossing = _endpoint_crossing(game, g)
    if crossing is not None:
        candidates.append(crossing)
    return min(candidates, key=lambda gamma: violation(game, gamma, g))


def substitute(game: GameSpec, g: GeneralizedPrediction) -> float:
    """
    Turns a generalized prediction into a legal prediction γ with
    λ(γ,ω) ≤ g(ω) at every sample point of g.
    """
    if game.kind == GameKind.SQUARE:
        gamma = _square_substitution(game, g)
    else:
        gamma = _argmin_substitution(game, g)
    excess = violation(game, gamma, g)
    if excess > SUBSTITUTION_TOLERANCE:
        log.debug("generalized prediction is not realizable", gamma=gamma, violation=excess)
        raise InfeasibleSubstitutionError(
            "no prediction dominates the generalized prediction",
            violation=excess,
            gamma=gamma,
        )
    return gamma


class MixabilityCheck(BaseModel):
    realizable: bool
    max_violation: float
    gamma: float


def check_mixability(
    game: GameSpec,
    c: float,
    eta: float,
    predictions: Sequence[float],
    weights: Sequence[float],
    grid: int,
) -> MixabilityCheck:
    """
    Grid test of the mixability condition for one mixture: is there a γ with
    λ(γ,ω) ≤ −(c/η) ln Σ p_i exp(−η λ(γ_i,ω)) at every grid outcome?
    The candidate set is the γ-grid, the experts' own predictions and the
    argmin substitution.
    """
    p = np.asarray(weights, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
        raise DomainError("weights must be a probability vector", total=float(p.sum()))
    for gamma in predictions:
        check_prediction(game, gamma)
    if game.binary:
        points = [game.y_lo, game.y_hi]
    else:
        points = [float(x) for x in np.linspace(game.y_lo, game.y_hi, grid)]
    with np.errstate(divide="ignore"):
        g = mixture(game, c, eta, predictions, np.log(p), points=points)

    candidates = [float(x) for x in np.linspace(game.y_lo, game.y_hi, grid)]
    candidates.extend(float(x) for x in predictions)
    candidates.append(_argmin_substitution(game, g))
    best = min(candidates, key=lambda gamma: violation(game, gamma, g))
    worst = violation(game, best, g)
    return MixabilityCheck(
        realizable=worst <= SUBSTITUTION_TOLERANCE,
        max_violation=worst,
        gamma=best,
    )
