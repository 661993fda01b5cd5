from __future__ import annotations


class GridInputError(ValueError):
    """Malformed input data or a violated precondition on grid inputs."""


class NumericalError(RuntimeError):
    """A solver failed to converge or produced an unusable result."""


class OverdampedModeError(NumericalError):
    def __init__(self, alpha: int, value: float) -> None:
        super().__init__(
            f"mode alpha={alpha} is overdamped (lambda/m - gamma^2/4 = {value:.6g} <= 0)"
        )
        self.alpha = alpha
        self.value = value
