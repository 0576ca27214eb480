from functools import wraps
from typing import Any, Callable, TypeVar

from prometheus_client import Histogram

F = TypeVar("F", bound=Callable[..., Any])


def time(histogram: Histogram, **label_values: str) -> Callable[[F], F]:
    """
    Time the wrapped call into `histogram`. Each label is read from the
    keyword argument it names, e.g. time(H, algorithm="algorithm").
    """

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            labels = {label: str(kwargs.get(arg_name)) for label, arg_name in label_values.items()}
            with histogram.labels(**labels).time():
                return func(*args, **kwargs)

        return wrapper  # type: ignore

    return decorator
