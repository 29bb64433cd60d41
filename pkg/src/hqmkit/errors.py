"""Exception hierarchy shared by all hqmkit modules."""


class HqmError(ValueError):
    """Base class for every error raised by hqmkit."""


class ParameterError(HqmError):
    """A parameter lies outside its admissible range."""


class StructureError(HqmError):
    """Arrays or series have inconsistent shapes or lengths."""


class DomainError(HqmError):
    """An operation was asked for a value outside its domain (empty input, t=0, ...)."""


class InfeasibleError(HqmError):
    """No admissible answer exists for the requested inputs."""


class ConfigError(HqmError):
    """Experiment configuration is invalid."""


class CsvFormatError(HqmError):
    """A CSV file does not follow the expected schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
