from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from discountlearn.discounting import DiscountLedger, check_alpha
from discountlearn.exceptions import DomainError, NumericError

log = structlog.get_logger(__name__)


def spd_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive definite system by Cholesky factorization."""
    try:
        factor = cho_factor(matrix, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as err:
        condition = float(np.linalg.cond(matrix)) if np.isfinite(matrix).all() else float("inf")
        log.error("factorization failed", condition=condition, error=str(err))
        raise NumericError(
            "matrix is not numerically positive definite", condition=condition
        ) from err
    return cho_solve(factor, rhs)


def spd_logdet(matrix: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(matrix)
    if sign <= 0:
        condition = float(np.linalg.cond(matrix))
        raise NumericError("matrix is not positive definite", condition=condition)
    return float(value)


def check_outcome_range(y: float, y_lo: float, y_hi: float) -> None:
    if not y_lo <= y <= y_hi:
        raise DomainError("outcome outside [y_lo, y_hi]", outcome=y, interval=(y_lo, y_hi))


class LinRegState(BaseModel):
    """
    Discounted ridge-type regression learner.

    `moment` is Σ_{t<T}(β_t/β_{T−1})·x_t x_t′ and `b` is Σ_{t<T}(β_t/β_{T−1})·y_t x_t.
    At prediction time both are scaled by α_{T−1} to bring them to the β_T
    normalization, and the current x is added to get
    A_T = aI + α·moment + x x′.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    a_ridge: float
    dim: int
    moment: np.ndarray
    b: np.ndarray
    y_lo: float
    y_hi: float
    ledger: DiscountLedger = DiscountLedger()

    @model_validator(mode="after")
    def check_shapes(self) -> "LinRegState":
        if self.a_ridge <= 0:
            raise ValueError("ridge parameter must be positive")
        if self.moment.shape != (self.dim, self.dim) or self.b.shape != (self.dim,):
            raise ValueError("moment and b must match dim")
        if not self.y_lo < self.y_hi:
            raise ValueError("y_lo must be below y_hi")
        return self

    @property
    def midpoint(self) -> float:
        return (self.y_hi + self.y_lo) / 2

    def matrix(self, alpha: float, x: np.ndarray) -> np.ndarray:
        """A_T for the current input x."""
        carry = alpha if self.ledger.t else 0.0
        return self.a_ridge * np.eye(self.dim) + carry * self.moment + np.outer(x, x)


def linreg_init(dim: int, a_ridge: float, y_lo: float, y_hi: float) -> LinRegState:
    if dim < 1:
        raise DomainError("dimension must be positive", dim=dim)
    return LinRegState(
        a_ridge=a_ridge,
        dim=dim,
        moment=np.zeros((dim, dim)),
        b=np.zeros(dim),
        y_lo=y_lo,
        y_hi=y_hi,
    )


def _vector(state: LinRegState, x: Sequence[float]) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (state.dim,):
        raise DomainError("input has the wrong dimension", expected=state.dim, got=v.size)
    return v


def linreg_predict(state: LinRegState, alpha: float, x: Sequence[float]) -> float:
    """γ_T = (α·b + ((Y₂+Y₁)/2)·x)′ A_T⁻¹ x."""
    check_alpha(alpha)
    v = _vector(state, x)
    carry = alpha if state.ledger.t else 0.0
    z = spd_solve(state.matrix(alpha, v), v)
    return float((carry * state.b + state.midpoint * v) @ z)


def linreg_update(state: LinRegState, alpha: float, x: Sequence[float], y: float) -> LinRegState:
    check_alpha(alpha)
    v = _vector(state, x)
    check_outcome_range(y, state.y_lo, state.y_hi)
    carry = alpha if state.ledger.t else 0.0
    return state.model_copy(
        update={
            "moment": carry * state.moment + np.outer(v, v),
            "b": carry * state.b + y * v,
            "ledger": state.ledger.advance(alpha),
        }
    )
