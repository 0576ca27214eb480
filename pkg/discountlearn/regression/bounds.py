import math

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from discountlearn.discounting import exponential_ratio
from discountlearn.exceptions import DomainError
from discountlearn.regression.kernel import discounted_gram
from discountlearn.regression.kernels import Kernel
from discountlearn.regression.linear import spd_logdet, spd_solve
from discountlearn.utils.enums import BoundMode


class WeightedData(BaseModel):
    """
    A regression history with its relative weights β_t/β_T (the diagonal of
    W_T, so the last weight is 1).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    inputs: np.ndarray
    outcomes: np.ndarray
    weights: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "WeightedData":
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a matrix")
        if not self.inputs.shape[0] == self.outcomes.size == self.weights.size:
            raise ValueError("inputs, outcomes and weights differ in length")
        return self

    @property
    def ratio(self) -> float:
        """B_T/β_T."""
        return float(self.weights.sum())


def _width_term(y_lo: float, y_hi: float) -> float:
    return (y_hi - y_lo) ** 2 / 4


def discounted_square_loss(data: WeightedData, predictions: np.ndarray) -> float:
    return float(data.weights @ (np.asarray(predictions, dtype=float) - data.outcomes) ** 2)


def linreg_bound(
    data: WeightedData,
    theta: np.ndarray,
    a_ridge: float,
    y_lo: float,
    y_hi: float,
    mode: BoundMode = BoundMode.DETERMINANT,
    z: float | None = None,
) -> float:
    """
    Right-hand side of the discounted linear regression guarantee for the
    comparator θ. The infinity-norm mode replaces the log-determinant by its
    diagonal estimate n·ln(Z²·(B_T/β_T)/a + 1) with Z ≥ max ‖x_t‖∞.
    """
    theta = np.asarray(theta, dtype=float)
    n = data.inputs.shape[1]
    if theta.shape != (n,):
        raise DomainError("comparator has the wrong dimension", expected=n, got=theta.size)
    fit = discounted_square_loss(data, data.inputs @ theta) + a_ridge * float(theta @ theta)
    if mode == BoundMode.INFINITY_NORM:
        bound = float(np.max(np.abs(data.inputs))) if data.inputs.size else 0.0
        z = bound if z is None else z
        if z < bound:
            raise DomainError("Z is below the largest input coordinate", z=z, largest=bound)
        return fit + n * _width_term(y_lo, y_hi) * math.log(z**2 * data.ratio / a_ridge + 1)
    weighted = data.inputs.T @ (data.weights[:, None] * data.inputs)
    return fit + _width_term(y_lo, y_hi) * spd_logdet(weighted / a_ridge + np.eye(n))


def linreg_exponential_bound(
    comparator_loss: float,
    theta: np.ndarray,
    a_ridge: float,
    y_lo: float,
    y_hi: float,
    alpha: float,
    steps: int,
    z: float,
) -> float:
    """The infinity-norm bound for constant discounting α, from the closed form of B_T/β_T."""
    theta = np.asarray(theta, dtype=float)
    ratio = exponential_ratio(alpha, steps)
    return (
        comparator_loss
        + a_ridge * float(theta @ theta)
        + theta.size * _width_term(y_lo, y_hi) * math.log(z**2 * ratio / a_ridge + 1)
    )


def ridge_comparator(data: WeightedData, a_ridge: float) -> np.ndarray:
    """θ* = (aI + X′WX)⁻¹X′Wy, the comparator the linear bound is tightest for."""
    n = data.inputs.shape[1]
    if data.outcomes.size == 0:
        return np.zeros(n)
    weighted = data.inputs.T @ (data.weights[:, None] * data.inputs)
    rhs = data.inputs.T @ (data.weights * data.outcomes)
    return spd_solve(a_ridge * np.eye(n) + weighted, rhs)


def kernel_logdet(data: WeightedData, kernel: Kernel, a_ridge: float) -> float:
    """ln det(√W K √W/a + I)."""
    _, scaled = discounted_gram(kernel, data.inputs, data.weights)
    return spd_logdet(scaled / a_ridge + np.eye(data.outcomes.size))


def kernreg_bound(
    data: WeightedData,
    coeffs: np.ndarray,
    kernel: Kernel,
    a_ridge: float,
    y_lo: float,
    y_hi: float,
) -> float:
    """Right-hand side of the kernel regression guarantee for f = Σ c_i k(·, x_i)."""
    c = np.asarray(coeffs, dtype=float)
    if c.size != data.outcomes.size:
        raise DomainError("one coefficient per history point", expected=data.outcomes.size)
    if c.size == 0:
        return 0.0
    gram = kernel.gram(data.inputs, data.inputs)
    fit = discounted_square_loss(data, gram @ c) + a_ridge * float(c @ gram @ c)
    return fit + _width_term(y_lo, y_hi) * kernel_logdet(data, kernel, a_ridge)


def tuned_ridge(c_f: float, horizon: float) -> float:
    """The ridge parameter a = c_F·√𝒯 for a known bound 𝒯 ≥ B_T/β_T."""
    return c_f * math.sqrt(horizon)


def logdet_cap(c_f: float, horizon: float, a_ridge: float) -> float:
    """c_F²·𝒯/a, the cap on the kernel log-determinant when B_T/β_T ≤ 𝒯."""
    return c_f**2 * horizon / a_ridge


def kernreg_tuned_bound(
    data: WeightedData,
    coeffs: np.ndarray,
    kernel: Kernel,
    c_f: float,
    horizon: float,
    y_lo: float,
    y_hi: float,
) -> float:
    """
    Σ w_t (f(x_t) − y_t)² + ((Y₂−Y₁)²/4 + ‖f‖²)·c_F·√𝒯, valid for the learner
    run with a = c_F√𝒯 while B_T/β_T ≤ 𝒯.
    """
    if data.ratio > horizon * (1 + 1e-12):
        raise DomainError(
            "B_T/β_T exceeds the announced horizon", ratio=data.ratio, horizon=horizon
        )
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return 0.0
    gram = kernel.gram(data.inputs, data.inputs)
    fit = discounted_square_loss(data, gram @ c)
    return fit + (_width_term(y_lo, y_hi) + float(c @ gram @ c)) * c_f * math.sqrt(horizon)
