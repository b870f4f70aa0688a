"""Exception types shared across the toolkit."""


class UnsupportedConfigError(ValueError):
    """A configuration the toolkit deliberately does not handle."""


class WrongPhaseError(ValueError):
    """A communication-phase planner was asked about a level outside its zone."""


class TopologyMismatchError(ValueError):
    """The folded process grid cannot be embedded into the given torus."""


class SizeLimitError(ValueError):
    """A request would materialize more data than the hard guard allows."""


class MeasurementParseError(ValueError):
    """A measurement file could not be parsed; carries the offending location."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.field = field


class MachineConfigError(ValueError):
    """A machine preset or parameter file is missing or inconsistent."""


class NoOverlapError(ValueError):
    """Prediction and measurement share no (level, phase) keys."""
