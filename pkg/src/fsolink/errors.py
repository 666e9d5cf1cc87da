"""Exception types raised across the package."""


class SamplingError(ValueError):
    """A grid cannot represent the requested field or propagation faithfully."""


class ConfigError(ValueError):
    """A run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SimulationError(RuntimeError):
    """A Monte Carlo trial failed; carries the seed needed to reproduce it."""

    def __init__(self, message, trial=None, seed=None):
        super().__init__(message)
        self.trial = trial
        self.seed = seed
