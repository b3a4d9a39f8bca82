class AgewiseError(Exception):
    """Base class for all package errors."""


class NetlistError(AgewiseError):
    """Raised on malformed or structurally invalid netlists."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", col {column}"
            loc += ": "
        super().__init__(loc + message)


class FormatError(AgewiseError):
    """Raised when an artifact file does not parse."""


class TimingError(AgewiseError):
    pass


class AgingError(AgewiseError):
    pass


class FabError(AgewiseError):
    pass


class FitError(AgewiseError):
    """A learner failed to produce a usable model."""


class DetectionError(AgewiseError):
    """A detection stage failed; ``stage`` names which one."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
