"""Exception types shared across the simulator."""


class TraceParseError(ValueError):
    """Trace or sidecar text violates the schema.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TraceDataError(ValueError):
    """Trace content is structurally valid but numerically unusable."""


class ConfigError(ValueError):
    """Bad run configuration: flags, generator spec, or cost parameters."""


class ContractViolation(ValueError):
    """Caller broke an operation precondition (lengths, ranges)."""


class SequencingError(RuntimeError):
    """Frame-lifecycle methods were called out of order."""
