class AdfTestError(Exception):
    """Base class for toolkit errors."""


class GeometryError(AdfTestError, ValueError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class InvalidCountError(AdfTestError, ValueError):
    pass


class FormatError(AdfTestError, ValueError):
    """Malformed or structurally incomplete input document."""


class ParseError(FormatError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UnsupportedElementError(FormatError):
    pass


class TemplateError(FormatError):
    pass


class RouteError(AdfTestError, ValueError):
    pass


class PlanningFailed(AdfTestError):
    pass


class InsufficientDataError(AdfTestError, ValueError):
    pass


class ConfigError(AdfTestError, ValueError):
    pass


class InvalidReferenceError(AdfTestError, ValueError):
    pass


class SamplingRateError(AdfTestError, ValueError):
    pass


class InvalidWindowError(AdfTestError, ValueError):
    pass
