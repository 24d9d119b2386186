from __future__ import annotations


class ConstraintViolation(ValueError):
    """A matrix entry or parameter constraint does not hold."""

    def __init__(self, message: str, entry: tuple[int, int] | None = None, value: float | None = None):
        super().__init__(message)
        self.entry = entry
        self.value = value


class SamplerExhausted(RuntimeError):
    pass
