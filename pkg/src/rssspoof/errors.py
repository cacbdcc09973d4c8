"""Exception types shared across the package."""


class ParseError(ValueError):
    """A persisted file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValueError):
    """A persisted file parsed but does not match the expected layout."""


class InfeasibleScenarioError(ValueError):
    """A requested experiment cannot be realized on the given geometry."""


class DegenerateCalibrationError(ValueError):
    """Threshold calibration needs samples from both classes."""
