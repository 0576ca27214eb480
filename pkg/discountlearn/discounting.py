import math
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from discountlearn.exceptions import DomainError

log = structlog.get_logger(__name__)


def check_alpha(alpha: float) -> None:
    # α = 0 would wipe the history, α > 1 is not covered by any bound
    if not 0.0 < alpha <= 1.0:
        raise DomainError("discount factor must lie in (0, 1]", alpha=alpha)


class DiscountLedger(BaseModel):
    """
    Discount bookkeeping for one run.

    β_t and B_t overflow on long heavily discounted runs, so the ledger keeps
    ln β_t and the ratio B_t/β_t instead. Every bound depends only on those.
    The ratio follows B_t/β_t = α_{t−1}·B_{t−1}/β_{t−1} + 1.

    When `eta_scale` is set the ledger also tracks η_t = a·√(β_t/B_t) and
    s_t = (1/β_t)·Σ_{τ≤t} β_τη_τ, which follows s_t = α_{t−1}·s_{t−1} + η_t.
    """

    model_config = ConfigDict(frozen=True)

    t: int = 0
    log_beta: float = 0.0
    ratio: float = 0.0
    last_alpha: float = 1.0
    eta_scale: float | None = None
    eta: float = 0.0
    s_acc: float = 0.0

    @property
    def beta(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_beta))

    @property
    def big_b(self) -> float:
        return self.ratio * self.beta

    def advance(self, alpha: float) -> "DiscountLedger":
        """
        Step to t+1 given the announced α_t. The very first call pins β₁ = 1
        and ignores its α, which would only multiply the zero initial loss.
        """
        check_alpha(alpha)
        if self.t == 0:
            log_beta, ratio = 0.0, 1.0
        else:
            log_beta = self.log_beta - math.log(alpha)
            ratio = alpha * self.ratio + 1.0
        eta, s_acc = 0.0, 0.0
        if self.eta_scale is not None:
            eta = self.eta_scale / math.sqrt(ratio)
            s_acc = (alpha * self.s_acc if self.t else 0.0) + eta
        return self.model_copy(
            update={
                "t": self.t + 1,
                "log_beta": log_beta,
                "ratio": ratio,
                "last_alpha": alpha,
                "eta": eta,
                "s_acc": s_acc,
            }
        )


def rate_exponent(prev: DiscountLedger, curr: DiscountLedger) -> float:
    """
    α_{t−1}·η_t/η_{t−1} between two consecutive ledgers. It does not depend
    on the scale a, and it is zero on the first step since there is no
    history to carry.
    """
    if prev.t == 0:
        return 0.0
    return curr.last_alpha * math.sqrt(prev.ratio / curr.ratio)


def accumulate(prev_loss: float, alpha: float, step_loss: float) -> float:
    check_alpha(alpha)
    return alpha * prev_loss + step_loss


def ledger_from_alphas(
    alphas: Sequence[float], eta_scale: float | None = None
) -> list[DiscountLedger]:
    """Ledgers after each step; alphas[0] is the ignored α₀."""
    ledgers: list[DiscountLedger] = []
    ledger = DiscountLedger(eta_scale=eta_scale)
    for alpha in alphas:
        ledger = ledger.advance(alpha)
        ledgers.append(ledger)
    return ledgers


def log_betas(alphas: Sequence[float]) -> np.ndarray:
    """ln β_t for t = 1..T; alphas[0] is the ignored α₀."""
    a = np.asarray(alphas, dtype=float)
    if a.size == 0:
        return np.zeros(0)
    if ((a <= 0) | (a > 1)).any():
        raise DomainError("discount factors must lie in (0, 1]")
    return np.concatenate([[0.0], np.cumsum(-np.log(a[1:]))])


def relative_weights(alphas: Sequence[float]) -> np.ndarray:
    """β_t/β_T for t = 1..T, the diagonal of W_T."""
    lb = log_betas(alphas)
    if lb.size == 0:
        return lb
    return np.exp(lb - lb[-1])


def exponential_ratio(alpha: float, steps: int) -> float:
    """B_T/β_T for constant discounting, (1 − α^T)/(1 − α)."""
    check_alpha(alpha)
    if alpha == 1.0:
        return float(steps)
    return (1.0 - alpha**steps) / (1.0 - alpha)


def lemma1_lhs_rhs(beta_seq: Sequence[float]) -> tuple[float, float]:
    """
    Both sides of (1/β_T)·Σ β_t·√(β_t/B_t) ≤ 2·√(B_T/β_T) for a
    non-decreasing sequence of β ≥ 1.
    """
    betas = np.asarray(beta_seq, dtype=float)
    if betas.size == 0:
        raise DomainError("beta sequence is empty")
    if (betas < 1).any():
        raise DomainError("beta values must be at least 1", smallest=float(betas.min()))
    if (np.diff(betas) < 0).any():
        raise DomainError("beta values must be non-decreasing")
    big_b = np.cumsum(betas)
    lhs = float(np.sum(betas * np.sqrt(betas / big_b)) / betas[-1])
    rhs = 2.0 * math.sqrt(big_b[-1] / betas[-1])
    return lhs, rhs
