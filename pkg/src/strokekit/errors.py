class StrokeKitError(Exception):
    """Base class for errors raised by strokekit."""

    code = "error"


class ConfigurationError(StrokeKitError, ValueError):
    code = "config"


class CoverageError(StrokeKitError, ValueError):
    """Audio does not cover a candidate window found on the IMU stream."""

    code = "coverage"

    def __init__(self, message, candidate=None):
        super().__init__(message)
        self.candidate = candidate


class SchemaError(StrokeKitError):
    code = "schema"

    def __init__(self, expected, actual, what="feature schema"):
        super().__init__(f"{what} mismatch: model expects {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class ModelFormatError(StrokeKitError):
    code = "model-format"


class IncompatibleModelError(ModelFormatError):
    code = "model-version"


class ProtocolError(StrokeKitError):
    code = "protocol"
