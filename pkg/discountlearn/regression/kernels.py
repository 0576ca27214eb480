import math

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.spatial.distance import cdist

from discountlearn.utils.enums import KernelKind


class Kernel(BaseModel):
    """
    One of the built-in positive definite kernels:
      dot         x·y
      rbf         exp(−‖x − y‖²/(2σ²))
      polynomial  (x·y + c0)^degree
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: KernelKind = KernelKind.DOT
    sigma: float = 1.0
    degree: int = 2
    c0: float = 1.0

    @model_validator(mode="after")
    def check_params(self) -> "Kernel":
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.degree < 1:
            raise ValueError("degree must be at least 1")
        if self.c0 < 0:
            raise ValueError("c0 must be non-negative")
        return self

    def gram(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(left, dtype=float))
        y = np.atleast_2d(np.asarray(right, dtype=float))
        if self.kind == KernelKind.RBF:
            return np.exp(-cdist(x, y, "sqeuclidean") / (2 * self.sigma**2))
        inner = x @ y.T
        if self.kind == KernelKind.POLYNOMIAL:
            return (inner + self.c0) ** self.degree
        return inner

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.gram(x, y)[0, 0])

    def diagonal(self, points: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == KernelKind.RBF:
            return np.ones(x.shape[0])
        sq = np.einsum("ij,ij->i", x, x)
        if self.kind == KernelKind.POLYNOMIAL:
            return (sq + self.c0) ** self.degree
        return sq

    def sup_norm(self, points: np.ndarray) -> float:
        """
        c_F = sup √k(x,x). Exact for rbf; for the other kernels the supremum
        over the given points.
        """
        if self.kind == KernelKind.RBF:
            return 1.0
        return math.sqrt(float(np.max(self.diagonal(points))))
