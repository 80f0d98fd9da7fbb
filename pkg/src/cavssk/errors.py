"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConfigError(ValueError):
    """A sweep configuration document failed validation."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f" [key: {key}]"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced an invalid result."""
