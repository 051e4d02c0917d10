"""Exception types raised across cavitylink.

Plain argument problems raise ``ValueError`` directly; the classes below mark the cases callers
(most importantly the command line runner) need to tell apart.
"""


class DomainError(ValueError):
    """Request is mathematically undefined for the given parameters (zero rate, singular system)."""


class SolverError(RuntimeError):
    """Numerical integration or linear solve failed."""


class DataError(ValueError):
    """Physically invalid data, e.g. negative populations beyond tolerance."""


class ConfigError(ValueError):
    """Configuration file could not be parsed or validated.

    :param message: human readable description
    :param location: ``line L, column C`` for syntax errors or a dotted field path for semantic errors
    """

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f'{location}: {message}' if location else message)
