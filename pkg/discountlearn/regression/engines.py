from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np
import structlog

from discountlearn.aggregation.aad import weight_margin
from discountlearn.aggregation.engine import AlgorithmSettings, Engine, StepReport
from discountlearn.discounting import accumulate, relative_weights
from discountlearn.exceptions import DomainError
from discountlearn.games import GameSpec
from discountlearn.regression import bounds, kernel, linear, mixed
from discountlearn.utils.enums import Algorithm, BoundMode, GameKind, KernelKind, Theorem

log = structlog.get_logger(__name__)


def _square_game_violations(algorithm: Algorithm, game: GameSpec) -> list[str]:
    if game.kind != GameKind.SQUARE or game.binary:
        return [f"{algorithm} plays the square loss on an outcome interval"]
    return []


def _features(x: np.ndarray | None) -> np.ndarray:
    if x is None:
        raise DomainError("regression step without an input vector")
    return np.asarray(x, dtype=float)


class _History:
    """Inputs, outcomes and discounts seen so far, for the bound oracles."""

    def __init__(self, dim: int):
        self.inputs = np.zeros((0, dim))
        self.outcomes: list[float] = []
        self.alphas: list[float] = []
        self.learner_loss = 0.0

    def add(self, alpha: float, x: np.ndarray, y: float, prediction: float) -> None:
        self.inputs = np.vstack([self.inputs, x[None, :]])
        self.outcomes.append(y)
        self.alphas.append(alpha)
        self.learner_loss = accumulate(self.learner_loss, alpha, (prediction - y) ** 2)

    def data(self) -> bounds.WeightedData:
        return bounds.WeightedData(
            inputs=self.inputs,
            outcomes=np.asarray(self.outcomes, dtype=float),
            weights=relative_weights(self.alphas),
        )


class LinRegEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        self.state = linear.linreg_init(dim, settings.ridge, game.y_lo, game.y_hi)
        self.history = _History(dim)
        rng = np.random.default_rng(seed)
        self.thetas = rng.normal(size=(settings.random_comparators, dim))

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.LINREG

    @staticmethod
    def name() -> str:
        return "Discounted Aggregating Algorithm for Regression"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.LINEAR

    @staticmethod
    def regression() -> bool:
        return True

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        return _square_game_violations(cls.id(), game)

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        return linear.linreg_predict(self.state, alpha, _features(x))

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        v = _features(x)
        self.state = linear.linreg_update(self.state, alpha, v, outcome)
        self.history.add(alpha, v, outcome, prediction)

    def report(self) -> StepReport:
        data = self.history.data()
        a = self.settings.ridge
        lo, hi = self.game.y_lo, self.game.y_hi
        best = bounds.ridge_comparator(data, a)
        best_loss = bounds.discounted_square_loss(data, data.inputs @ best)
        det = bounds.linreg_bound(data, best, a, lo, hi)
        norm = bounds.linreg_bound(data, best, a, lo, hi, mode=BoundMode.INFINITY_NORM)
        for theta in self.thetas:
            det = min(det, bounds.linreg_bound(data, theta, a, lo, hi))
        learner = self.history.learner_loss
        return StepReport(
            learner_loss=learner,
            best_expert_loss=best_loss,
            comparator_losses={"ridge": best_loss},
            bounds={Theorem.LINEAR: det, Theorem.LINEAR_NORM: norm},
            slacks={Theorem.LINEAR: det - learner, Theorem.LINEAR_NORM: norm - learner},
        )


class KernRegEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        self.c_f: float | None = None
        a = settings.ridge
        if settings.horizon_bound is not None:
            self.c_f = settings.c_f or settings.kernel.sup_norm(np.zeros((1, dim)))
            a = bounds.tuned_ridge(self.c_f, settings.horizon_bound)
            log.info("ridge tuned to horizon", a_ridge=a, horizon=settings.horizon_bound)
        self.a_ridge = a
        self.state = kernel.kernreg_init(
            settings.kernel, dim, a, game.y_lo, game.y_hi, settings.window_threshold
        )
        self.history = _History(dim)

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.KERNREG

    @staticmethod
    def name() -> str:
        return "Discounted Kernel Aggregating Algorithm for Regression"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.KERNEL

    @staticmethod
    def regression() -> bool:
        return True

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        violations = _square_game_violations(cls.id(), game)
        tuned = settings.horizon_bound is not None
        if tuned and settings.c_f is None and settings.kernel.kind != KernelKind.RBF:
            violations.append("tuning to a horizon needs c_f unless the kernel is rbf")
        return violations

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        return kernel.kernreg_predict(self.state, alpha, _features(x))

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        v = _features(x)
        self.state = kernel.kernreg_update(self.state, alpha, v, outcome)
        self.history.add(alpha, v, outcome, prediction)

    def report(self) -> StepReport:
        data = self.history.data()
        k = self.settings.kernel
        lo, hi = self.game.y_lo, self.game.y_hi
        coeffs = kernel.kernel_ridge_comparator(
            data.inputs, data.outcomes, data.weights, k, self.a_ridge
        )
        fitted = k.gram(data.inputs, data.inputs) @ coeffs
        best_loss = bounds.discounted_square_loss(data, fitted)
        learner = self.history.learner_loss
        rhs = bounds.kernreg_bound(data, coeffs, k, self.a_ridge, lo, hi)
        report_bounds = {Theorem.KERNEL: rhs}
        slacks = {Theorem.KERNEL: rhs - learner}
        horizon = self.settings.horizon_bound
        if horizon is not None and self.c_f is not None and data.ratio <= horizon:
            tuned = bounds.kernreg_tuned_bound(data, coeffs, k, self.c_f, horizon, lo, hi)
            report_bounds[Theorem.KERNEL_TUNED] = tuned
            slacks[Theorem.KERNEL_TUNED] = tuned - learner
        return StepReport(
            learner_loss=learner,
            best_expert_loss=best_loss,
            comparator_losses={"kernel_ridge": best_loss},
            bounds=report_bounds,
            slacks=slacks,
        )


class MixedAEngine(Engine):
    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        super().__init__(game, settings, n_experts, dim, seed)
        member_kernel = settings.kernel if settings.member == Algorithm.KERNREG else None
        self.state = mixed.mixed_a_init(
            settings.a_grid, dim, game.y_lo, game.y_hi, member_kernel, settings.window_threshold
        )
        self.executor = ThreadPoolExecutor(settings.workers) if settings.workers > 1 else None
        self.raw = np.zeros(len(settings.a_grid))

    @staticmethod
    def id() -> Algorithm:
        return Algorithm.MIXED_A

    @staticmethod
    def name() -> str:
        return "Ridge grid mixture"

    @staticmethod
    def primary() -> Theorem:
        return Theorem.MIXED

    @staticmethod
    def regression() -> bool:
        return True

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        violations = _square_game_violations(cls.id(), game)
        if settings.member not in (Algorithm.LINREG, Algorithm.KERNREG):
            violations.append(f"grid members must be linreg or kernreg, got {settings.member}")
        if not settings.a_grid or min(settings.a_grid) <= 0:
            violations.append("a_grid must hold positive ridge parameters")
        return violations

    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        v = _features(x)
        prediction, self.raw = mixed.mixed_a_predict(self.state, alpha, v, self.executor)
        return prediction

    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        self.state = mixed.mixed_a_update(
            self.state, alpha, _features(x), self.raw, prediction, outcome
        )

    def report(self) -> StepReport:
        s = self.state
        per_member = mixed.mixed_a_bound(s)
        bound = float(np.min(per_member))
        learner = s.aad.learner_loss
        return StepReport(
            learner_loss=learner,
            best_expert_loss=float(np.min(s.member_losses)),
            comparator_losses={f"a_{a:g}": float(v) for a, v in zip(s.grid, s.member_losses)},
            bounds={Theorem.MIXED: bound},
            slacks={Theorem.MIXED: bound - learner, Theorem.WEIGHTS: weight_margin(s.aad)},
        )

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown()
