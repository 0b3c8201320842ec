"""Exception types raised by the solver and its front ends."""


class ChnsError(Exception):
    """Base class for all package errors."""


class CompatibilityError(ChnsError):
    """Right side of a singular elliptic problem has a nonzero mean."""


class OrderError(ChnsError, ValueError):
    """Requested BDF order is outside 1..5."""


class StateError(ChnsError):
    """Solver state became inadmissible (NaN/Inf, nonpositive energy shift, ...)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class UnknownScenario(ChnsError, KeyError):
    """No preset with the requested name."""

    def __str__(self):
        return Exception.__str__(self)


class ConfigError(ChnsError):
    """Base class for run-configuration problems."""


class ParseError(ConfigError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ConfigError):
    def __init__(self, key, message=None):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key
