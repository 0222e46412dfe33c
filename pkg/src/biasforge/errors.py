"""Exception types shared across the package."""


class BiasforgeError(Exception):
    """Base class for all package errors."""


class DataFormatError(BiasforgeError, ValueError):
    """A data file could not be parsed.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ConfigError(BiasforgeError, ValueError):
    """Invalid or inconsistent configuration."""


class EncodingError(BiasforgeError, ValueError):
    """A symbol could not be mapped to the model vocabulary."""


class TrainingFault(BiasforgeError, FloatingPointError):
    """A non-finite value appeared during a forward or backward pass."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
