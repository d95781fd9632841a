"""Exception types shared across the toolkit."""

from __future__ import annotations


class DomainError(ValueError):
    """A parameter lies outside the domain of the requested formula."""

    def __init__(self, param: str, value, reason: str):
        self.param = param
        self.value = value
        super().__init__(f"{param}={value!r}: {reason}")


class NoBracketError(RuntimeError):
    """The target likelihood is not attainable anywhere in the search range."""

    def __init__(self, unknown: str, target: float, low: float, high: float):
        self.unknown = unknown
        self.target = target
        self.attainable = (min(low, high), max(low, high))
        super().__init__(
            f"no value of {unknown} attains L={target:.6g}; "
            f"achievable likelihood range is [{self.attainable[0]:.6g}, {self.attainable[1]:.6g}]"
        )
