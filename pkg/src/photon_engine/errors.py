class EngineError(Exception):
    """Base class for simulation failures."""


class TruncationError(EngineError):
    """Fock truncation too small for the populations being carried."""


class TraceDriftError(EngineError):
    """Trace (or another CPTP sanity bound) lost during integration."""


class ConvergenceError(EngineError):
    """Cycle iteration did not reach the steady periodic state.

    ``record`` holds the last measured cycle so callers can still report it.
    """

    def __init__(self, message, record=None, residual=None):
        super().__init__(message)
        self.record = record
        self.residual = residual


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""
