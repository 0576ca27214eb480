import math
from concurrent.futures import Executor
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from discountlearn.aggregation.aad import (
    AadState,
    aad_init,
    aad_predict,
    aad_update,
    inverse_square_priors,
)
from discountlearn.discounting import accumulate
from discountlearn.exceptions import DomainError
from discountlearn.games import GameSpec
from discountlearn.regression.kernel import (
    KernRegState,
    kernreg_init,
    kernreg_predict,
    kernreg_update,
)
from discountlearn.regression.kernels import Kernel
from discountlearn.regression.linear import (
    LinRegState,
    linreg_init,
    linreg_predict,
    linreg_update,
)

log = structlog.get_logger(__name__)

Member = LinRegState | KernRegState


class MixedAState(BaseModel):
    """
    Regression learners over a grid of ridge parameters, merged by the
    discounted aggregating algorithm on the square game with priors ∝ 1/a².
    `member_losses` are the members' own discounted losses, before their
    predictions are clipped into [y_lo, y_hi] for the merge.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: tuple[float, ...]
    members: tuple[Member, ...]
    aad: AadState
    member_losses: np.ndarray

    @property
    def y_lo(self) -> float:
        return self.aad.game.y_lo

    @property
    def y_hi(self) -> float:
        return self.aad.game.y_hi


def mixed_a_init(
    grid: Sequence[float],
    dim: int,
    y_lo: float,
    y_hi: float,
    kernel: Kernel | None = None,
    window_threshold: float = 1e-12,
) -> MixedAState:
    if len(grid) == 0:
        raise DomainError("ridge grid is empty")
    members: list[Member] = []
    for a in grid:
        if kernel is None:
            members.append(linreg_init(dim, a, y_lo, y_hi))
        else:
            members.append(kernreg_init(kernel, dim, a, y_lo, y_hi, window_threshold))
    return MixedAState(
        grid=tuple(float(a) for a in grid),
        members=tuple(members),
        aad=aad_init(GameSpec.square(y_lo, y_hi), priors=inverse_square_priors(grid)),
        member_losses=np.zeros(len(grid)),
    )


def _member_predict(member: Member, alpha: float, x: Sequence[float]) -> float:
    if isinstance(member, LinRegState):
        return linreg_predict(member, alpha, x)
    return kernreg_predict(member, alpha, x)


def _member_update(member: Member, alpha: float, x: Sequence[float], y: float) -> Member:
    if isinstance(member, LinRegState):
        return linreg_update(member, alpha, x, y)
    return kernreg_update(member, alpha, x, y)


def member_predictions(
    state: MixedAState, alpha: float, x: Sequence[float], executor: Executor | None = None
) -> np.ndarray:
    """Raw member predictions; members are independent so they may run concurrently."""
    if executor is None:
        raw = [_member_predict(m, alpha, x) for m in state.members]
    else:
        raw = list(executor.map(lambda m: _member_predict(m, alpha, x), state.members))
    return np.asarray(raw, dtype=float)


def mixed_a_predict(
    state: MixedAState, alpha: float, x: Sequence[float], executor: Executor | None = None
) -> tuple[float, np.ndarray]:
    """The merged prediction and the raw member predictions it came from."""
    raw = member_predictions(state, alpha, x, executor)
    clipped = np.clip(raw, state.y_lo, state.y_hi)
    return aad_predict(state.aad, alpha, clipped), raw


def mixed_a_update(
    state: MixedAState,
    alpha: float,
    x: Sequence[float],
    raw_preds: np.ndarray,
    prediction: float,
    y: float,
) -> MixedAState:
    raw = np.asarray(raw_preds, dtype=float)
    clipped = np.clip(raw, state.y_lo, state.y_hi)
    aad = aad_update(state.aad, alpha, clipped, prediction, y)
    members = tuple(_member_update(m, alpha, x, y) for m in state.members)
    losses = np.array(
        [accumulate(prev, alpha, (p - y) ** 2) for prev, p in zip(state.member_losses, raw)]
    )
    return state.model_copy(update={"aad": aad, "members": members, "member_losses": losses})


def mixed_a_bound(state: MixedAState) -> np.ndarray:
    """
    Per member: its discounted loss plus ((Y₂−Y₁)²/2)·ln(a²/c),
    the merge overhead for that member's prior weight.
    """
    grid = np.asarray(state.grid)
    width = (state.y_hi - state.y_lo) ** 2
    return state.member_losses + width / 2 * np.log(grid**2 / norm_constant(state.grid))


def norm_constant(grid: Sequence[float]) -> float:
    """c with 1/c = Σ_{grid} 1/a²."""
    return 1.0 / math.fsum(1.0 / float(a) ** 2 for a in grid)
