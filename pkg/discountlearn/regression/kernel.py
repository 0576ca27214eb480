from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, model_validator

from discountlearn.discounting import DiscountLedger, check_alpha
from discountlearn.exceptions import DomainError
from discountlearn.regression.kernels import Kernel
from discountlearn.regression.linear import check_outcome_range, spd_solve

log = structlog.get_logger(__name__)

DEFAULT_WINDOW_THRESHOLD = 1e-12


class KernRegState(BaseModel):
    """
    Kernelized discounted regression learner. Keeps the whole history
    (inputs, outcomes and ln β_t of each step) and solves the dual system at
    every prediction. History whose relative weight β_t/β_T falls below
    `window_threshold` is dropped.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kernel: Kernel
    a_ridge: float
    y_lo: float
    y_hi: float
    dim: int
    points: np.ndarray
    outcomes: np.ndarray
    log_betas: np.ndarray
    ledger: DiscountLedger = DiscountLedger()
    window_threshold: float = DEFAULT_WINDOW_THRESHOLD

    @model_validator(mode="after")
    def check_params(self) -> "KernRegState":
        if self.a_ridge <= 0:
            raise ValueError("ridge parameter must be positive")
        if not self.y_lo < self.y_hi:
            raise ValueError("y_lo must be below y_hi")
        if not 0 <= self.window_threshold < 1:
            raise ValueError("window_threshold must lie in [0, 1)")
        return self

    @property
    def midpoint(self) -> float:
        return (self.y_hi + self.y_lo) / 2


def kernreg_init(
    kernel: Kernel,
    dim: int,
    a_ridge: float,
    y_lo: float,
    y_hi: float,
    window_threshold: float = DEFAULT_WINDOW_THRESHOLD,
) -> KernRegState:
    if dim < 1:
        raise DomainError("dimension must be positive", dim=dim)
    return KernRegState(
        kernel=kernel,
        a_ridge=a_ridge,
        y_lo=y_lo,
        y_hi=y_hi,
        dim=dim,
        points=np.zeros((0, dim)),
        outcomes=np.zeros(0),
        log_betas=np.zeros(0),
        window_threshold=window_threshold,
    )


def _vector(state: KernRegState, x: Sequence[float]) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (state.dim,):
        raise DomainError("input has the wrong dimension", expected=state.dim, got=v.size)
    return v


def kernreg_predict(state: KernRegState, alpha: float, x: Sequence[float]) -> float:
    """
    γ_T = (Y_{T−1}; (Y₂+Y₁)/2)′·√W·(aI + √W K √W)⁻¹·√W·k, with K the Gram
    matrix of the kept history plus x and k its last column.
    """
    check_alpha(alpha)
    v = _vector(state, x)
    log_beta_now = state.ledger.advance(alpha).log_beta
    weights = np.exp(state.log_betas - log_beta_now)
    keep = weights >= state.window_threshold

    points = np.vstack([state.points[keep], v[None, :]])
    root_w = np.sqrt(np.append(weights[keep], 1.0))
    targets = np.append(state.outcomes[keep], state.midpoint)

    gram = state.kernel.gram(points, points)
    system = state.a_ridge * np.eye(points.shape[0]) + root_w[:, None] * gram * root_w[None, :]
    z = spd_solve(system, root_w * gram[:, -1])
    return float(targets @ (root_w * z))


def kernreg_update(state: KernRegState, alpha: float, x: Sequence[float], y: float) -> KernRegState:
    check_alpha(alpha)
    v = _vector(state, x)
    check_outcome_range(y, state.y_lo, state.y_hi)
    ledger = state.ledger.advance(alpha)
    weights = np.exp(state.log_betas - ledger.log_beta)
    keep = weights >= state.window_threshold
    dropped = int((~keep).sum())
    if dropped:
        log.debug("dropping stale history", step=ledger.t, dropped=dropped)
    return state.model_copy(
        update={
            "points": np.vstack([state.points[keep], v[None, :]]),
            "outcomes": np.append(state.outcomes[keep], y),
            "log_betas": np.append(state.log_betas[keep], ledger.log_beta),
            "ledger": ledger,
        }
    )


def discounted_gram(
    kernel: Kernel, points: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """The Gram matrix K and √W K √W for the given relative weights."""
    gram = kernel.gram(points, points)
    root_w = np.sqrt(np.asarray(weights, dtype=float))
    return gram, root_w[:, None] * gram * root_w[None, :]


def kernel_ridge_comparator(
    points: np.ndarray, outcomes: np.ndarray, weights: np.ndarray, kernel: Kernel, a_ridge: float
) -> np.ndarray:
    """
    Coefficients c of f = Σ c_i k(·, x_i) minimizing
    Σ w_t (f(x_t) − y_t)² + a‖f‖², i.e. c = (WK + aI)⁻¹Wy, computed through
    the symmetric form √W(√W K √W + aI)⁻¹√W y.
    """
    y = np.asarray(outcomes, dtype=float)
    if y.size == 0:
        return np.zeros(0)
    _, scaled = discounted_gram(kernel, points, weights)
    root_w = np.sqrt(np.asarray(weights, dtype=float))
    z = spd_solve(scaled + a_ridge * np.eye(y.size), root_w * y)
    return root_w * z
