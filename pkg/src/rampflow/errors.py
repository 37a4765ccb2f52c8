"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration value; the message names the offending field."""


class InvariantViolationError(RuntimeError):
    """A runtime invariant broke (density left [0, 1] beyond roundoff).

    Carries the failing step index and simulation time so a crashed run can
    be located in the diagnostics.
    """

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time
