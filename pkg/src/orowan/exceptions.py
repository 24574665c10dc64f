class ConvergenceError(RuntimeError):
    """An iterative computation did not reach its tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class MonotonicityError(RuntimeError):
    """The layer iterate stopped being strictly increasing."""

    def __init__(self, message, index=None, x=None):
        super().__init__(message)
        self.index = index
        self.x = x


class CollisionError(RuntimeError):
    """Two particles came closer than the collision threshold."""

    def __init__(self, message, pair=None, t=None):
        super().__init__(message)
        self.pair = pair
        self.t = t


class BlowUpError(RuntimeError):
    """A time integration produced non-finite values."""


class ConfigError(ValueError):
    """Invalid run configuration."""
