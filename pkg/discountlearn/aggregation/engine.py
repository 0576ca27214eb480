from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from discountlearn.games import GameSpec
from discountlearn.regression.kernels import Kernel
from discountlearn.utils.enums import Algorithm, Theorem


class AlgorithmSettings(BaseModel):
    """The `algorithm` block of a scenario file."""

    model_config = ConfigDict(extra="forbid")

    a_param: float | None = None
    j_max: int = Field(default=50, ge=1)
    epsilons: list[float] | None = None
    ridge: float = Field(default=1.0, gt=0)
    kernel: Kernel = Kernel()
    a_grid: list[float] = [1.0, 2.0, 3.0, 4.0]
    member: Algorithm = Algorithm.LINREG
    window_threshold: float = Field(default=1e-12, ge=0, lt=1)
    priors: list[float] | None = None
    horizon_bound: float | None = Field(default=None, gt=0)
    c_f: float | None = Field(default=None, gt=0)
    random_comparators: int = Field(default=0, ge=0)
    workers: int = Field(default=0, ge=0)


class StepReport(BaseModel):
    """
    What an engine knows after a step: its loss, the comparators' losses and
    the right-hand side of every guarantee it carries. `slacks` holds
    bound − learner loss for each guarantee plus the invariant margins
    (weights, threshold), all of which must stay non-negative.
    """

    learner_loss: float
    best_expert_loss: float
    comparator_losses: dict[str, float] = {}
    bounds: dict[str, float] = {}
    slacks: dict[str, float] = {}


class Engine(ABC):
    """
    One learner behind a common step interface so the protocol runner can
    drive every algorithm the same way. Expert engines read `expert_preds`,
    regression engines read `x`; the other argument is ignored.
    """

    def __str__(self) -> str:
        return self.name()

    def __init__(
        self,
        game: GameSpec,
        settings: AlgorithmSettings,
        n_experts: int = 0,
        dim: int = 0,
        seed: int = 0,
    ):
        self.game = game
        self.settings = settings
        self.n_experts = n_experts
        self.dim = dim
        self.seed = seed

    @staticmethod
    @abstractmethod
    def id() -> Algorithm:
        ...

    @staticmethod
    @abstractmethod
    def name() -> str:
        ...

    @staticmethod
    @abstractmethod
    def primary() -> Theorem:
        """The guarantee reported in the bound/slack columns."""
        ...

    @staticmethod
    def regression() -> bool:
        return False

    @classmethod
    def check(cls, game: GameSpec, settings: AlgorithmSettings) -> list[str]:
        """Reasons this engine cannot play `game`; empty when it can."""
        _ = (game, settings)
        return []

    @abstractmethod
    def predict(self, alpha: float, expert_preds: Sequence[float], x: np.ndarray | None) -> float:
        ...

    @abstractmethod
    def update(
        self,
        alpha: float,
        expert_preds: Sequence[float],
        x: np.ndarray | None,
        prediction: float,
        outcome: float,
    ) -> None:
        ...

    @abstractmethod
    def report(self) -> StepReport:
        ...

    def close(self) -> None:
        return None
