from typing import Any


class DiscountLearnError(Exception):
    def __init__(self, message: str, **context: Any):
        self.message = message
        self.context = context
        super().__init__(self.message)

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({details})"


class DomainError(DiscountLearnError, ValueError):
    """An argument lies outside the set the operation is defined on."""


class UnsupportedGameError(DiscountLearnError):
    pass


class InfeasibleSubstitutionError(DiscountLearnError):
    def __init__(self, message: str, violation: float, **context: Any):
        self.violation = violation
        super().__init__(message, violation=violation, **context)


class ConsistencyError(DiscountLearnError):
    """
    An invariant the algorithms guarantee by construction did not hold.
    This always signals a bug, never bad input.
    """

    def __init__(
        self, message: str, check: str, step: int = 0, excess: float = 0.0, **context: Any
    ):
        self.check = check
        self.step = step
        self.excess = excess
        super().__init__(message, check=check, step=step, excess=excess, **context)


class ExistenceViolationError(ConsistencyError):
    pass


class NumericError(DiscountLearnError):
    def __init__(self, message: str, condition: float = float("inf"), **context: Any):
        self.condition = condition
        super().__init__(message, condition=condition, **context)


class ConfigurationError(DiscountLearnError):
    def __init__(self, message: str, violations: list[str] | None = None, **context: Any):
        self.violations = violations or []
        super().__init__(message, **context)

    def __str__(self) -> str:
        if not self.violations:
            return super().__str__()
        return f"{super().__str__()}: " + "; ".join(self.violations)
