from typing import Sequence

import numpy as np
import structlog

from discountlearn import games
from discountlearn.aggregation import aad, convex, fdfd
from discountlearn.aggregation.engine import AlgorithmSettings, Engine, StepReport
from discountlearn.exceptions import ConfigurationError
from discountlearn.games import GameSpec
from discountlearn.regression.engines import KernRegEngine, LinRegEngine, MixedAEngine
from discountlearn.utils.enums import Algorithm, Theorem

log = structlog.get_logger(__name__)


def _expert_losses(losses: np.ndarray) -> dict[str, float]:
    return {f"expert_{k}": float(v) for k, v in enumerate(losses)}


class AadEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        self.state = aad.aad_init(game, settings.priors, n_experts)

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.AAD

    @staticmethod
    def name() -> str:
        return "Aggregating Algorithm with Discounting"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.AAD

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        if games.mixability_constants(game) is None:
            return [f"{cls.id()} needs a mixable game, {game.kind} has no constants with c = 1"]
        return []

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        return aad.aad_predict(self.state, alpha, expert_preds)

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        self.state = aad.aad_update(self.state, alpha, expert_preds, prediction, outcome)

    def report(self) -> StepReport:
        bound = float(np.min(aad.aad_bounds(self.state)))
        learner = self.state.learner_loss
        return StepReport(
            learner_loss=learner,
            best_expert_loss=float(np.min(self.state.expert_losses)),
            comparator_losses=_expert_losses(self.state.expert_losses),
            bounds={Theorem.AAD: bound},
            slacks={
                Theorem.AAD: bound - learner,
                Theorem.WEIGHTS: aad.weight_margin(self.state),
            },
        )


class ConvexEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        self.state = convex.conv_init(game, n_experts, settings.a_param)

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.CONVEX

    @staticmethod
    def name() -> str:
        return "Weak Aggregating Algorithm with Discounting"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.CONVEX

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        if games.loss_bound(game) is None:
            return [f"{cls.id()} needs bounded losses, {game.kind} is unbounded"]
        return []

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        return convex.conv_predict(self.state, alpha, expert_preds)

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        self.state = convex.conv_update(self.state, alpha, expert_preds, prediction, outcome)

    def report(self) -> StepReport:
        s = self.state
        best = float(np.min(s.expert_losses))
        k = s.n_experts
        bound = s.scale * (best + convex.conv_bound(s.ledger, k, self.settings.a_param))
        pre = s.scale * (best + convex.conv_prebound(s.ledger, k, s.a_param))
        learner = s.scale * s.learner_loss
        return StepReport(
            learner_loss=learner,
            best_expert_loss=s.scale * best,
            comparator_losses=_expert_losses(s.scale * s.expert_losses),
            bounds={Theorem.CONVEX: bound, Theorem.CONVEX_PRE: pre},
            slacks={
                Theorem.CONVEX: bound - learner,
                Theorem.CONVEX_PRE: pre - learner,
                Theorem.WEIGHTS: -convex.weight_sum_log(s),
            },
        )


class FdfdEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        self.state = fdfd.fdfd_init(game, n_experts, settings.j_max)
        epsilons = settings.epsilons or [1.0 / n_experts, 0.1, 0.25, 0.5]
        self.epsilons = sorted({e for e in epsilons if 0 < e <= 1})

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.FDFD

    @staticmethod
    def name() -> str:
        return "Fake Defensive Forecasting with Discounting"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.QUANTILE

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        violations: list[str] = []
        if not game.binary:
            violations.append(f"{cls.id()} needs a binary outcome set")
        if games.loss_bound(game) is None:
            violations.append(f"{cls.id()} needs bounded losses, {game.kind} is unbounded")
        return violations

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        return fdfd.fdfd_predict(self.state, alpha, expert_preds)

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        self.state = fdfd.fdfd_update(self.state, alpha, expert_preds, prediction, outcome)

    def report(self) -> StepReport:
        s = self.state
        learner = s.scale * s.learner_loss
        comparators = _expert_losses(s.scale * s.expert_losses)
        # the bound holds for every ε at once; report the tightest one
        bound = np.inf
        for eps in self.epsilons:
            quantile = s.scale * fdfd.quantile_loss(s.expert_losses, eps)
            comparators[f"quantile_{eps:g}"] = quantile
            bound = min(bound, quantile + s.scale * fdfd.fdfd_quantile_bound(s.ledger, eps))
        threshold = np.exp(s.last_log_threshold)
        margin = min(1.0 - threshold, threshold - np.exp(s.last_log_f))
        return StepReport(
            learner_loss=learner,
            best_expert_loss=s.scale * float(np.min(s.expert_losses)),
            comparator_losses=comparators,
            bounds={Theorem.QUANTILE: float(bound)},
            slacks={Theorem.QUANTILE: float(bound) - learner, Theorem.THRESHOLD: float(margin)},
        )


_engines: list[type[Engine]] = [
    AadEngine,
    ConvexEngine,
    FdfdEngine,
    LinRegEngine,
    KernRegEngine,
    MixedAEngine,
]


def all_engines() -> list[type[Engine]]:
    return _engines


def get_engine(
    algorithm: Algorithm,
    game: GameSpec,
    settings: AlgorithmSettings,
    n_experts: int = 0,
    dim: int = 0,
    seed: int = 0,
) -> Engine:
    for e in _engines:
        if e.id() == algorithm:
            violations = e.check(game, settings)
            if violations:
                raise ConfigurationError(
                    f"{algorithm} cannot play this game", violations=violations
                )
            log.debug("engine selected", algorithm=algorithm, engine=e.name())
            return e(game=game, settings=settings, n_experts=n_experts, dim=dim, seed=seed)
    raise ConfigurationError(f"unknown algorithm {algorithm}")
