class EggsError(Exception):
    """Base class for all errors raised by eggsim."""


class ConfigError(EggsError, ValueError):
    """A configuration value violates a type invariant."""


class NumericalGuardError(EggsError):
    """A runtime numerical guard (truncation, norm drift, convergence) failed."""


class TruncationError(NumericalGuardError):
    pass


class NormDriftError(NumericalGuardError):
    pass


class ConvergenceError(NumericalGuardError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AmbiguousThresholdError(NumericalGuardError):
    def __init__(self, message, dark_mean, bright_mean):
        super().__init__(message)
        self.dark_mean = dark_mean
        self.bright_mean = bright_mean
