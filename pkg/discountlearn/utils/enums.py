import sys

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # pragma: no cover - backport of the 3.11 StrEnum semantics
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()


class GameKind(StrEnum):
    SQUARE = "square"
    LOG = "log"
    ABSOLUTE = "absolute"


class Algorithm(StrEnum):
    AAD = "aad"
    CONVEX = "convex"
    FDFD = "fdfd"
    LINREG = "linreg"
    KERNREG = "kernreg"
    MIXED_A = "mixed_a"


class Theorem(StrEnum):
    """Names of the audited guarantees, as they appear in traces and on the CLI."""

    AAD = "aad"
    CONVEX = "convex"
    CONVEX_PRE = "convex_pre"
    QUANTILE = "quantile"
    LINEAR = "linear"
    LINEAR_NORM = "linear_norm"
    KERNEL = "kernel"
    KERNEL_TUNED = "kernel_tuned"
    MIXED = "mixed"
    WEIGHTS = "weights"
    THRESHOLD = "threshold"


class KernelKind(StrEnum):
    DOT = "dot"
    RBF = "rbf"
    POLYNOMIAL = "polynomial"


class BoundMode(StrEnum):
    DETERMINANT = "determinant"
    INFINITY_NORM = "infinity_norm"


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"


class DiscountKind(StrEnum):
    CONSTANT = "constant"
    LIST = "list"
    RESTART = "restart"
    RANDOM = "random"


class ExpertKind(StrEnum):
    CONSTANT = "constant"
    NOISY_ORACLE = "noisy_oracle"
    SWITCHING_ORACLE = "switching_oracle"
    ADVERSARIAL_MIDPOINT = "adversarial_midpoint"


class RealityKind(StrEnum):
    RANDOM = "random"
    CSV = "csv"
    ADVERSARIAL = "adversarial"
    LINEAR = "linear"
